#include "ossr/config.hpp"

#include <fstream>

#include "ossr/error.hpp"

namespace ossr {

using nlohmann::json;

namespace {

const char* kTurnNames[] = {"black", "white", "left", "right", "minority", "majority"};

std::string turn_name(TurnPolicy p) { return kTurnNames[static_cast<int>(p)]; }

TurnPolicy turn_from(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kTurnNames[i]) return static_cast<TurnPolicy>(i);
  throw Error(ErrorCode::InvalidConfig, "unknown turn policy '" + s + "'");
}

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

}  // namespace

TrainConfig PipelineConfig::train_config() const {
  TrainConfig t = train;
  t.front = front;
  t.seed = seed;
  return t;
}

RecognizeParams PipelineConfig::recognize_params() const {
  RecognizeParams r = recognize;
  r.front = front;
  r.points = train.points;
  return r;
}

json to_json(const PipelineConfig& c) {
  const auto& s = c.front.segment;
  const auto& t = c.train;
  const auto& a = t.augment;
  return json{
      {"seed", c.seed},
      {"binarize", {{"window", c.front.window}, {"offset", c.front.offset}}},
      {"trace",
       {{"turn_policy", turn_name(c.front.trace.turn_policy)},
        {"turdsize", c.front.trace.turdsize},
        {"alphamax", c.front.trace.alphamax},
        {"opticurve", c.front.trace.opticurve},
        {"opttolerance", c.front.trace.opttolerance}}},
      {"sample",
       {{"target_width", s.sampling.target_width}, {"delta", s.sampling.delta}, {"tau_merge", s.sampling.tau_merge}}},
      {"segment",
       {{"epsilon", s.epsilon},
        {"beta", s.beta},
        {"search_radius", s.search_radius},
        {"angular_tolerance", s.angular_tolerance},
        {"stroke_quantile", s.stroke_quantile},
        {"m_windows", s.m_windows},
        {"axis_tolerance", s.axis_tolerance},
        {"gap_max", s.gap_max},
        {"collinear_tolerance", s.collinear_tolerance},
        {"terminal_turn", s.terminal_turn},
        {"min_unexplained", s.min_unexplained}}},
      {"net",
       {{"points", t.points},
        {"k", t.net.k},
        {"widths", t.net.widths},
        {"hidden", t.net.hidden},
        {"embed", t.net.embed},
        {"s", t.net.s},
        {"margin", t.net.margin}}},
      {"train",
       {{"augmentations", t.augmentations},
        {"epochs", t.epochs},
        {"batch", t.batch},
        {"lr", t.lr},
        {"momentum", t.momentum},
        {"stub", t.stub},
        {"stroke", t.stroke},
        {"margin", t.margin},
        {"threads", t.threads},
        {"augment",
         {{"rotation_deg", a.rotation_deg},
          {"scale_min", a.scale_min},
          {"scale_max", a.scale_max},
          {"shear", a.shear},
          {"window", a.window},
          {"window_jitter", a.window_jitter}}}}},
      {"recognize",
       {{"widths", c.recognize.widths}, {"min_score", c.recognize.min_score}, {"threads", c.recognize.threads}}},
      {"synth",
       {{"width", c.synth.width},
        {"height", c.synth.height},
        {"grid", c.synth.grid},
        {"pipes", c.synth.pipes},
        {"symbols", c.synth.symbols},
        {"stroke_min", c.synth.stroke_min},
        {"stroke_max", c.synth.stroke_max},
        {"scale_min", c.synth.scale_min},
        {"scale_max", c.synth.scale_max},
        {"clearance", c.synth.clearance},
        {"noise", c.synth.noise},
        {"max_retries", c.synth.max_retries}}},
      {"eval", {{"iou_threshold", c.iou_threshold}}},
  };
}

PipelineConfig from_json(const json& root) {
  json j = to_json(PipelineConfig{});
  merge_strict(j, root);
  PipelineConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& b = j.at("binarize");
    b.at("window").get_to(c.front.window);
    b.at("offset").get_to(c.front.offset);
    const auto& tr = j.at("trace");
    c.front.trace.turn_policy = turn_from(tr.at("turn_policy").get<std::string>());
    tr.at("turdsize").get_to(c.front.trace.turdsize);
    tr.at("alphamax").get_to(c.front.trace.alphamax);
    tr.at("opticurve").get_to(c.front.trace.opticurve);
    tr.at("opttolerance").get_to(c.front.trace.opttolerance);
    auto& s = c.front.segment;
    const auto& sa = j.at("sample");
    sa.at("target_width").get_to(s.sampling.target_width);
    sa.at("delta").get_to(s.sampling.delta);
    sa.at("tau_merge").get_to(s.sampling.tau_merge);
    const auto& sg = j.at("segment");
    sg.at("epsilon").get_to(s.epsilon);
    sg.at("beta").get_to(s.beta);
    sg.at("search_radius").get_to(s.search_radius);
    sg.at("angular_tolerance").get_to(s.angular_tolerance);
    sg.at("stroke_quantile").get_to(s.stroke_quantile);
    sg.at("m_windows").get_to(s.m_windows);
    sg.at("axis_tolerance").get_to(s.axis_tolerance);
    sg.at("gap_max").get_to(s.gap_max);
    sg.at("collinear_tolerance").get_to(s.collinear_tolerance);
    sg.at("terminal_turn").get_to(s.terminal_turn);
    sg.at("min_unexplained").get_to(s.min_unexplained);
    auto& t = c.train;
    const auto& n = j.at("net");
    n.at("points").get_to(t.points);
    n.at("k").get_to(t.net.k);
    n.at("widths").get_to(t.net.widths);
    n.at("hidden").get_to(t.net.hidden);
    n.at("embed").get_to(t.net.embed);
    n.at("s").get_to(t.net.s);
    n.at("margin").get_to(t.net.margin);
    const auto& tj = j.at("train");
    tj.at("augmentations").get_to(t.augmentations);
    tj.at("epochs").get_to(t.epochs);
    tj.at("batch").get_to(t.batch);
    tj.at("lr").get_to(t.lr);
    tj.at("momentum").get_to(t.momentum);
    tj.at("stub").get_to(t.stub);
    tj.at("stroke").get_to(t.stroke);
    tj.at("margin").get_to(t.margin);
    tj.at("threads").get_to(t.threads);
    const auto& aj = tj.at("augment");
    aj.at("rotation_deg").get_to(t.augment.rotation_deg);
    aj.at("scale_min").get_to(t.augment.scale_min);
    aj.at("scale_max").get_to(t.augment.scale_max);
    aj.at("shear").get_to(t.augment.shear);
    aj.at("window").get_to(t.augment.window);
    aj.at("window_jitter").get_to(t.augment.window_jitter);
    const auto& rj = j.at("recognize");
    rj.at("widths").get_to(c.recognize.widths);
    rj.at("min_score").get_to(c.recognize.min_score);
    rj.at("threads").get_to(c.recognize.threads);
    const auto& sy = j.at("synth");
    sy.at("width").get_to(c.synth.width);
    sy.at("height").get_to(c.synth.height);
    sy.at("grid").get_to(c.synth.grid);
    sy.at("pipes").get_to(c.synth.pipes);
    sy.at("symbols").get_to(c.synth.symbols);
    sy.at("stroke_min").get_to(c.synth.stroke_min);
    sy.at("stroke_max").get_to(c.synth.stroke_max);
    sy.at("scale_min").get_to(c.synth.scale_min);
    sy.at("scale_max").get_to(c.synth.scale_max);
    sy.at("clearance").get_to(c.synth.clearance);
    sy.at("noise").get_to(c.synth.noise);
    sy.at("max_retries").get_to(c.synth.max_retries);
    j.at("eval").at("iou_threshold").get_to(c.iou_threshold);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  validate(c);
  return c;
}

void merge_strict(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw Error(ErrorCode::InvalidConfig, "expected an object at '" + where + "'");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) merge_strict(slot, it.value(), key);
    else slot = it.value();
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::UsageError, "override must look like section.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  for (std::size_t end = path.size();;) {
    const auto dot = path.rfind('.', end - 1);
    const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1, end - (dot == std::string::npos ? 0 : dot + 1));
    patch = json{{key, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_strict(j, patch);
}

PipelineConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  json j = to_json(PipelineConfig{});
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::FileNotFound, file.string());
    const json parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + file.string());
    merge_strict(j, parsed);
  }
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j);
}

void validate(const PipelineConfig& c) {
  const auto& s = c.front.segment;
  check(c.front.window >= 3 && c.front.window % 2 == 1, "binarize.window must be odd and >= 3");
  check(c.front.trace.turdsize >= 0, "trace.turdsize must be >= 0");
  check(c.front.trace.alphamax >= 0 && c.front.trace.alphamax <= 4.0 / 3.0, "trace.alphamax must lie in [0, 4/3]");
  check(c.front.trace.opttolerance >= 0, "trace.opttolerance must be >= 0");
  check(s.sampling.target_width > 0, "sample.target_width must be positive");
  check(s.sampling.delta > 0, "sample.delta must be positive");
  check(s.sampling.tau_merge >= 0, "sample.tau_merge must be >= 0");
  check(s.epsilon > 0 && s.beta > 0 && s.search_radius > 0, "segment.epsilon, beta and search_radius must be positive");
  check(s.stroke_quantile >= 0 && s.stroke_quantile <= 1, "segment.stroke_quantile must lie in [0, 1]");
  check(s.m_windows >= 1, "segment.m_windows must be >= 1");
  check(s.gap_max > 0 && s.axis_tolerance >= 0, "segment.gap_max must be positive");
  const auto& t = c.train;
  check(t.points >= 1, "net.points must be >= 1");
  check(t.net.k >= 1 && t.net.k <= t.points, "net.k must lie in [1, points]");
  check(t.net.widths[0] > 0 && t.net.widths[1] > 0 && t.net.widths[2] > 0 && t.net.hidden > 0 && t.net.embed > 0,
        "net widths must be positive");
  check(t.net.s > 0, "net.s must be positive");
  check(t.net.margin >= 0 && t.net.margin < 1.5707963267948966, "net.margin must lie in [0, pi/2)");
  check(t.augmentations >= 1 && t.epochs >= 1 && t.batch >= 1, "train counts must be positive");
  check(t.lr > 0 && t.momentum >= 0 && t.momentum < 1, "train.lr must be positive and momentum in [0, 1)");
  check(t.augment.scale_min > 0 && t.augment.scale_min <= t.augment.scale_max, "augment scale range invalid");
  check(t.augment.window >= 1, "augment.window must be >= 1");
  check(c.recognize.widths[0] > 0 && c.recognize.widths[1] > 0, "recognize.widths must be positive");
  check(c.synth.width > 0 && c.synth.height > 0 && c.synth.grid > 0, "synth canvas must be positive");
  check(c.synth.stroke_min >= 1 && c.synth.stroke_min <= c.synth.stroke_max, "synth stroke range invalid");
  check(c.synth.noise >= 0 && c.synth.noise < 1, "synth.noise must lie in [0, 1)");
  check(c.iou_threshold > 0 && c.iou_threshold <= 1, "eval.iou_threshold must lie in (0, 1]");
}

}  // namespace ossr
