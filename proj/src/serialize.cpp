#include "ossr/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ossr/error.hpp"

namespace ossr {

using nlohmann::json;

namespace {

constexpr int kModelFormat = 1;

json point_json(Vec2 p) { return json::array({p.x, p.y}); }

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
  return v;
}

// 3x5 block letters, rows top to bottom.
const std::map<char, const char*>& font() {
  static const std::map<char, const char*> f = {
      {'0', "111101101101111"}, {'1', "010110010010111"}, {'2', "111001111100111"}, {'3', "111001111001111"},
      {'4', "101101111001001"}, {'5', "111100111001111"}, {'6', "111100111101111"}, {'7', "111001001001001"},
      {'8', "111101111101111"}, {'9', "111101111001111"}, {'a', "010101111101101"}, {'b', "110101110101110"},
      {'c', "011100100100011"}, {'d', "110101101101110"}, {'e', "111100110100111"}, {'f', "111100110100100"},
      {'g', "011100101101011"}, {'h', "101101111101101"}, {'i', "111010010010111"}, {'j', "001001001101010"},
      {'k', "101101110101101"}, {'l', "100100100100111"}, {'m', "101111111101101"}, {'n', "110101101101101"},
      {'o', "010101101101010"}, {'p', "110101110100100"}, {'q', "010101101110011"}, {'r', "110101110101101"},
      {'s', "011100010001110"}, {'t', "111010010010010"}, {'u', "101101101101111"}, {'v', "101101101101010"},
      {'w', "101101111111101"}, {'x', "101101010101101"}, {'y', "101101010010010"}, {'z', "111001010100111"},
      {'_', "000000000000111"}, {'-', "000000111000000"}, {'.', "000000000000010"},
  };
  return f;
}

void put(RgbImage& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c[0], c[1], c[2]);
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::UnsupportedFormat, "not valid JSON: " + path.string());
  return j;
}

json bbox_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::UnsupportedFormat, "bbox must be [x0, y0, x1, y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json paths_json(const VectorPathSet& paths) {
  json out = {{"schema_version", kSchemaVersion}, {"width", paths.width}, {"height", paths.height}};
  json arr = json::array();
  for (const auto& p : paths.paths) {
    json loops = json::array();
    for (const auto& l : p.loops) {
      json segs = json::array();
      for (const auto& s : l.segments) {
        if (s.kind == SegmentKind::Line)
          segs.push_back({{"kind", "line"}, {"points", {point_json(s.p[0]), point_json(s.p[3])}}});
        else
          segs.push_back({{"kind", "bezier"},
                          {"points", {point_json(s.p[0]), point_json(s.p[1]), point_json(s.p[2]), point_json(s.p[3])}}});
      }
      loops.push_back({{"orientation", l.orientation == LoopOrientation::Outer ? "outer" : "hole"},
                       {"signed_area", l.signed_area},
                       {"segments", std::move(segs)}});
    }
    arr.push_back({{"loops", std::move(loops)}});
  }
  out["paths"] = std::move(arr);
  return out;
}

std::string paths_svg(const VectorPathSet& paths) {
  std::ostringstream os;
  os.precision(10);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << paths.width << "\" height=\"" << paths.height
     << "\" viewBox=\"0 0 " << paths.width << ' ' << paths.height << "\">\n";
  for (const auto& p : paths.paths) {
    os << "<path fill=\"black\" fill-rule=\"evenodd\" d=\"";
    for (const auto& l : p.loops) {
      if (l.segments.empty()) continue;
      const Vec2 s = l.segments.front().start();
      os << 'M' << s.x << ' ' << s.y;
      for (const auto& seg : l.segments) {
        if (seg.kind == SegmentKind::Line) os << 'L' << seg.p[3].x << ' ' << seg.p[3].y;
        else
          os << 'C' << seg.p[1].x << ' ' << seg.p[1].y << ' ' << seg.p[2].x << ' ' << seg.p[2].y << ' ' << seg.p[3].x
             << ' ' << seg.p[3].y;
      }
      os << 'Z';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

json sampled_json(const std::vector<SampledPath>& paths) {
  json arr = json::array();
  for (const auto& p : paths) {
    json loops = json::array();
    for (const auto& l : p.loops) {
      json pts = json::array();
      for (std::size_t i = 0; i < l.size(); ++i)
        pts.push_back({{"x", l.points[i].x}, {"y", l.points[i].y}, {"slope", l.slopes[i]}, {"merged", l.merged[i] != 0}});
      loops.push_back({{"closed", l.closed}, {"degenerate", l.degenerate}, {"length", l.length}, {"points", std::move(pts)}});
    }
    arr.push_back({{"path_id", p.path_id}, {"loops", std::move(loops)}});
  }
  return {{"schema_version", kSchemaVersion}, {"paths", std::move(arr)}};
}

json segmentation_json(const SegmentResult& seg) {
  json regions = json::array();
  for (const auto& r : seg.regions)
    regions.push_back({{"region_id", r.region_id},
                       {"bbox", bbox_json(seg.image_bbox(r))},
                       {"origin", std::string(to_string(r.origin))},
                       {"incident_lines", r.incident_lines},
                       {"point_count", r.points.size()}});
  json lines = json::array();
  const double inv = 1.0 / seg.scale;
  for (const auto& l : seg.lines)
    lines.push_back({{"a", point_json(l.a * inv)}, {"b", point_json(l.b * inv)}, {"slope", l.slope}});
  std::size_t line_points = 0;
  for (const auto& p : seg.points) line_points += p.label == PointLabel::Line ? 1 : 0;
  return {{"scale", seg.scale},
          {"stroke_threshold", seg.t},
          {"point_count", seg.points.size()},
          {"line_point_count", line_points},
          {"regions", std::move(regions)},
          {"lines", std::move(lines)}};
}

json recognitions_json(const std::string& sheet, const SheetRecognition& rec) {
  json arr = json::array();
  for (const auto& r : rec.recognitions)
    arr.push_back({{"region_id", r.region_id},
                   {"bbox", bbox_json(r.bbox)},
                   {"class", r.class_name},
                   {"score", r.score},
                   {"votes", r.votes}});
  return {{"schema_version", kSchemaVersion}, {"sheet", sheet}, {"recognitions", std::move(arr)}};
}

json truth_json(const std::vector<PlacedSymbol>& truth) {
  json arr = json::array();
  for (const auto& s : truth)
    arr.push_back({{"class", s.class_name}, {"bbox", bbox_json(s.bbox)}, {"orientation", s.orientation}});
  return {{"schema_version", kSchemaVersion}, {"symbols", std::move(arr)}};
}

std::vector<PlacedSymbol> truth_from(const json& j) {
  std::vector<PlacedSymbol> out;
  try {
    for (const auto& s : j.at("symbols"))
      out.push_back({s.at("class").get<std::string>(), bbox_from(s.at("bbox")), s.value("orientation", 0)});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::UnsupportedFormat, std::string("ground truth: ") + e.what());
  }
  return out;
}

json report_json(const MatchReport& r) {
  json classes = json::object();
  for (const auto& [name, c] : r.classes) {
    const Prf p = prf(c.tp, c.fp, c.fn);
    classes[name] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
  }
  auto prf_j = [](const Prf& p) { return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; };
  return {{"schema_version", kSchemaVersion},
          {"note", "classification counted over predicted regions matched to ground truth at the IoU threshold"},
          {"localization",
           {{"correct", r.correct}, {"false", r.false_regions}, {"missing", r.missing}, {"scores", prf_j(r.localization())}}},
          {"classes", std::move(classes)},
          {"macro", prf_j(r.macro())},
          {"micro", prf_j(r.micro())}};
}

void save_model(const std::filesystem::path& dir, const ModelState<float>& model, const ClassDirectory& directory,
                const json& extra) {
  std::string blob;
  json blocks = json::array();
  model.visit([&](const auto& m) {
    blocks.push_back({{"rows", m.rows()}, {"cols", m.cols()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const std::uint32_t v = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
        blob.append(reinterpret_cast<const char*>(&v), 4);
      }
  });
  const auto& n = model.config;
  json manifest = {{"schema_version", kSchemaVersion},
                   {"format_version", kModelFormat},
                   {"dtype", "float32-le"},
                   {"order", "per layer theta, phi, bias; then w1, b1, w2, b2, arc; row-major"},
                   {"net",
                    {{"k", n.k}, {"in_dim", n.in_dim}, {"widths", n.widths}, {"hidden", n.hidden}, {"embed", n.embed},
                     {"classes", n.classes}, {"s", n.s}, {"margin", n.margin}}},
                   {"parameter_count", model.parameter_count()},
                   {"blocks", std::move(blocks)}};
  if (!extra.is_null()) manifest["run"] = extra;
  json entries = json::array();
  for (const auto& e : directory.entries)
    entries.push_back({{"class", e.class_name},
                       {"orientation", e.orientation},
                       {"embedding", std::vector<float>(e.embedding.data(), e.embedding.data() + e.embedding.size())}});
  std::filesystem::create_directories(dir);
  write_atomic(dir / "params.bin", blob);
  write_json(dir / "directory.json",
             {{"schema_version", kSchemaVersion}, {"classes", directory.classes}, {"entries", std::move(entries)}});
  write_json(dir / "manifest.json", manifest);
}

void load_model(const std::filesystem::path& dir, ModelState<float>& model, ClassDirectory& directory) {
  const json manifest = read_json(dir / "manifest.json");
  try {
    if (manifest.at("format_version").get<int>() != kModelFormat)
      throw Error(ErrorCode::UnsupportedFormat, "unsupported model format version");
    const auto& n = manifest.at("net");
    NetConfig cfg;
    n.at("k").get_to(cfg.k);
    n.at("in_dim").get_to(cfg.in_dim);
    n.at("widths").get_to(cfg.widths);
    n.at("hidden").get_to(cfg.hidden);
    n.at("embed").get_to(cfg.embed);
    n.at("classes").get_to(cfg.classes);
    n.at("s").get_to(cfg.s);
    n.at("margin").get_to(cfg.margin);
    model = ModelState<float>::initialize(cfg, 0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::UnsupportedFormat, std::string("manifest: ") + e.what());
  }
  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, (dir / "params.bin").string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() != model.parameter_count() * 4)
    throw Error(ErrorCode::ShapeMismatch, "params.bin size does not match the manifest");
  std::size_t off = 0;
  model.visit([&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::uint32_t v;
        std::memcpy(&v, blob.data() + off, 4);
        off += 4;
        m(r, c) = std::bit_cast<float>(to_le(v));
      }
  });

  const json dj = read_json(dir / "directory.json");
  directory = {};
  try {
    dj.at("classes").get_to(directory.classes);
    for (const auto& e : dj.at("entries")) {
      const auto v = e.at("embedding").get<std::vector<float>>();
      if (static_cast<int>(v.size()) != model.config.embed)
        throw Error(ErrorCode::ShapeMismatch, "directory embedding width does not match the model");
      directory.entries.push_back({e.at("class").get<std::string>(), e.at("orientation").get<int>(),
                                   Eigen::Map<const Vector<float>>(v.data(), static_cast<Eigen::Index>(v.size()))});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::UnsupportedFormat, std::string("directory: ") + e.what());
  }
}

RgbImage render_overlay(const GrayImage& page, const std::vector<OverlayBox>& boxes) {
  RgbImage img(page);
  // Fade the page so the annotations stand out.
  for (auto& v : img.data) v = static_cast<std::uint8_t>(128 + v / 2);
  const auto& f = font();
  for (const auto& b : boxes) {
    const int x0 = static_cast<int>(std::floor(b.bbox.x0)), y0 = static_cast<int>(std::floor(b.bbox.y0));
    const int x1 = static_cast<int>(std::ceil(b.bbox.x1)) - 1, y1 = static_cast<int>(std::ceil(b.bbox.y1)) - 1;
    for (int t = 0; t < 2; ++t) {
      for (int x = x0 - t; x <= x1 + t; ++x) {
        put(img, x, y0 - t, b.color);
        put(img, x, y1 + t, b.color);
      }
      for (int y = y0 - t; y <= y1 + t; ++y) {
        put(img, x0 - t, y, b.color);
        put(img, x1 + t, y, b.color);
      }
    }
    const int scale = 2;
    int cx = x0, cy = y0 - 6 * scale - 2;
    if (cy < 0) cy = y1 + 4;
    for (char ch : b.label) {
      const auto it = f.find(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      if (it != f.end())
        for (int r = 0; r < 5; ++r)
          for (int c = 0; c < 3; ++c)
            if (it->second[r * 3 + c] == '1')
              for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx) put(img, cx + c * scale + dx, cy + r * scale + dy, b.color);
      cx += 4 * scale;
    }
  }
  return img;
}

}  // namespace ossr
