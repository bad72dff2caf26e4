#pragma once

#include <array>

namespace testsupport {

struct PrfRow {
  const char* name;
  double precision, recall, f1;
};

// Per-symbol precision, recall and F1 of the graph network trained with plain
// cross-entropy, as printed (four decimals) in the published results table.
inline constexpr std::array<PrfRow, 25> kPublishedRows{{
    {"symbol1", 0.7565, 0.7005, 0.7274},  {"symbol2", 0.8161, 0.8512, 0.8333},
    {"symbol3", 0.7602, 0.7238, 0.7416},  {"symbol4", 0.7360, 0.7825, 0.7585},
    {"symbol5", 0.8137, 0.7630, 0.7875},  {"symbol6", 0.8316, 0.7562, 0.7921},
    {"symbol7", 0.7875, 0.7478, 0.7671},  {"symbol8", 0.7520, 0.8473, 0.7968},
    {"symbol9", 0.6144, 0.8366, 0.7084},  {"symbol10", 0.8595, 0.7355, 0.7926},
    {"symbol11", 0.6786, 0.8614, 0.7591}, {"symbol12", 0.7609, 0.6100, 0.6771},
    {"symbol13", 0.8304, 0.7907, 0.8101}, {"symbol14", 0.8601, 0.8175, 0.8382},
    {"symbol15", 0.7614, 0.7537, 0.7576}, {"symbol16", 0.7802, 0.8481, 0.8128},
    {"symbol17", 0.6363, 0.7968, 0.7076}, {"symbol18", 0.8159, 0.8259, 0.8209},
    {"symbol19", 0.7554, 0.6301, 0.6871}, {"symbol20", 0.7844, 0.7636, 0.7739},
    {"symbol21", 0.8520, 0.8193, 0.8353}, {"symbol22", 0.7872, 0.8282, 0.8072},
    {"symbol23", 0.7314, 0.8093, 0.7684}, {"symbol24", 0.7196, 0.7593, 0.7389},
    {"symbol25", 0.7963, 0.6293, 0.7030},
}};

}  // namespace testsupport
