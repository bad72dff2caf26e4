#include "cli_app.hpp"

int main(int argc, char** argv) { return ossr::cli_main(argc, argv); }
