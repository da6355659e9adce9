#include "specloc/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace specloc {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
}

void reject_unknown_keys(const json& j, const std::string& ptr,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(ptr + "/" + key, "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ConfigError(ptr, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw ConfigError(ptr, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw ConfigError(ptr, "expected a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ConfigError(ptr, "expected a string");
  return j.get<std::string>();
}

Position get_point(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(ptr, "expected an array of 2 numbers");
  }
  return {get_number(j[0], ptr + "/0"), get_number(j[1], ptr + "/1")};
}

Spectrum get_spectrum(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != kNumChannels) {
    throw ConfigError(ptr, "expected an array of 11 numbers");
  }
  Spectrum s;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    s[c] = get_number(j[c], ptr + "/" + std::to_string(c));
  }
  return s;
}

std::vector<int> get_int_list(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ptr, "expected a non-empty array of integers");
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_int(j[i], ptr + "/" + std::to_string(i)));
  }
  return out;
}

std::vector<double> get_number_list(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(ptr, "expected a non-empty array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], ptr + "/" + std::to_string(i)));
  }
  return out;
}

void parse_room(const json& j, const std::string& ptr, RoomConfig& room) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"vertices", "reference_points", "grid"});
  if (j.contains("vertices")) {
    const auto& v = j["vertices"];
    if (!v.is_array() || v.size() < 3) {
      throw ConfigError(ptr + "/vertices", "expected >= 3 [x,y] pairs");
    }
    room.vertices.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      room.vertices.push_back(
          get_point(v[i], ptr + "/vertices/" + std::to_string(i)));
    }
  }
  if (j.contains("reference_points")) {
    const auto& v = j["reference_points"];
    if (!v.is_array() || v.empty()) {
      throw ConfigError(ptr + "/reference_points", "expected [x,y] pairs");
    }
    room.reference_points.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      room.reference_points.push_back(
          get_point(v[i], ptr + "/reference_points/" + std::to_string(i)));
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    expect_object(g, ptr + "/grid");
    reject_unknown_keys(g, ptr + "/grid",
                        {"origin_x", "origin_y", "pitch_x", "pitch_y"});
    if (g.contains("origin_x")) room.grid.origin_x = get_number(g["origin_x"], ptr + "/grid/origin_x");
    if (g.contains("origin_y")) room.grid.origin_y = get_number(g["origin_y"], ptr + "/grid/origin_y");
    if (g.contains("pitch_x")) room.grid.pitch_x = get_number(g["pitch_x"], ptr + "/grid/pitch_x");
    if (g.contains("pitch_y")) room.grid.pitch_y = get_number(g["pitch_y"], ptr + "/grid/pitch_y");
    if (room.grid.pitch_x <= 0 || room.grid.pitch_y <= 0) {
      throw ConfigError(ptr + "/grid", "pitch must be positive");
    }
  }
}

Lamp parse_lamp(const json& j, const std::string& ptr) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"pos", "emission", "lambert_order"});
  Lamp lamp;
  if (!j.contains("pos")) throw ConfigError(ptr + "/pos", "required");
  const auto& pos = j["pos"];
  if (!pos.is_array() || pos.size() != 3) {
    throw ConfigError(ptr + "/pos", "expected an array of 3 numbers");
  }
  lamp.x = get_number(pos[0], ptr + "/pos/0");
  lamp.y = get_number(pos[1], ptr + "/pos/1");
  lamp.z = get_number(pos[2], ptr + "/pos/2");
  if (!j.contains("emission")) throw ConfigError(ptr + "/emission", "required");
  lamp.emission = get_spectrum(j["emission"], ptr + "/emission");
  if (j.contains("lambert_order")) {
    lamp.lambert_order = get_number(j["lambert_order"], ptr + "/lambert_order");
  }
  try {
    validate_lamp(lamp);
  } catch (const std::exception& e) {
    throw ConfigError(ptr, e.what());
  }
  return lamp;
}

void parse_sensor(const json& j, const std::string& ptr, SensorModel& sensor) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"height_cm", "noise_rel", "ambient", "adc_max"});
  if (j.contains("height_cm")) sensor.height_cm = get_number(j["height_cm"], ptr + "/height_cm");
  if (j.contains("noise_rel")) sensor.noise_rel = get_number(j["noise_rel"], ptr + "/noise_rel");
  if (j.contains("ambient")) sensor.ambient = get_spectrum(j["ambient"], ptr + "/ambient");
  if (j.contains("adc_max")) sensor.adc_max = get_number(j["adc_max"], ptr + "/adc_max");
  try {
    validate_sensor(sensor);
  } catch (const std::exception& e) {
    throw ConfigError(ptr, e.what());
  }
}

void parse_protocol(const json& j, const std::string& ptr, Protocol& protocol) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"dwell_s", "rate_hz"});
  if (j.contains("dwell_s")) protocol.dwell_s = get_number(j["dwell_s"], ptr + "/dwell_s");
  if (j.contains("rate_hz")) protocol.rate_hz = get_number(j["rate_hz"], ptr + "/rate_hz");
  try {
    protocol.samples_per_point();
  } catch (const std::exception& e) {
    throw ConfigError(ptr, e.what());
  }
}

void parse_split(const json& j, const std::string& ptr, SplitFractions& split) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"train", "val", "test"});
  if (j.contains("train")) split.train = get_number(j["train"], ptr + "/train");
  if (j.contains("val")) split.val = get_number(j["val"], ptr + "/val");
  if (j.contains("test")) split.test = get_number(j["test"], ptr + "/test");
  const double sum = split.train + split.val + split.test;
  if (split.train < 0 || split.val < 0 || split.test < 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(ptr, "fractions must be non-negative and sum to 1");
  }
}

void parse_space(const json& j, const std::string& ptr, SearchSpace& space) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr,
                      {"depth_min", "depth_max", "widths", "dropout",
                       "lr_log10_min", "lr_log10_max", "batch", "max_epochs",
                       "patience"});
  if (j.contains("depth_min")) space.depth_min = get_int(j["depth_min"], ptr + "/depth_min");
  if (j.contains("depth_max")) space.depth_max = get_int(j["depth_max"], ptr + "/depth_max");
  if (j.contains("widths")) space.widths = get_int_list(j["widths"], ptr + "/widths");
  if (j.contains("dropout")) space.dropout = get_number_list(j["dropout"], ptr + "/dropout");
  if (j.contains("lr_log10_min")) space.lr_log10_min = get_number(j["lr_log10_min"], ptr + "/lr_log10_min");
  if (j.contains("lr_log10_max")) space.lr_log10_max = get_number(j["lr_log10_max"], ptr + "/lr_log10_max");
  if (j.contains("batch")) space.batch = get_int_list(j["batch"], ptr + "/batch");
  if (j.contains("max_epochs")) space.max_epochs = get_int(j["max_epochs"], ptr + "/max_epochs");
  if (j.contains("patience")) space.patience = get_int(j["patience"], ptr + "/patience");
  if (space.depth_min < 1 || space.depth_max < space.depth_min) {
    throw ConfigError(ptr, "depth bounds must satisfy 1 <= min <= max");
  }
  for (int w : space.widths) {
    if (w < 1) throw ConfigError(ptr + "/widths", "widths must be >= 1");
  }
  for (double p : space.dropout) {
    if (!(p >= 0 && p < 1)) throw ConfigError(ptr + "/dropout", "must be in [0, 1)");
  }
  for (int b : space.batch) {
    if (b < 1) throw ConfigError(ptr + "/batch", "batch sizes must be >= 1");
  }
  if (space.lr_log10_max < space.lr_log10_min) {
    throw ConfigError(ptr, "lr_log10 bounds out of order");
  }
  if (space.max_epochs < 1 || space.patience < 1) {
    throw ConfigError(ptr, "max_epochs and patience must be >= 1");
  }
}

void parse_localizer(const json& j, const std::string& ptr,
                     LocalizerConfig& loc) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"n_trials", "parallel_trials", "space"});
  if (j.contains("n_trials")) loc.n_trials = get_int(j["n_trials"], ptr + "/n_trials");
  if (j.contains("parallel_trials")) loc.parallel_trials = get_bool(j["parallel_trials"], ptr + "/parallel_trials");
  if (j.contains("space")) parse_space(j["space"], ptr + "/space", loc.space);
  if (loc.n_trials < 1) {
    throw ConfigError(ptr + "/n_trials", "must be >= 1");
  }
}

void parse_gan(const json& j, const std::string& ptr, GanConfig& gan) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr,
                      {"latent_dim", "gen_widths", "disc_widths", "epochs",
                       "batch", "lr_g", "lr_d", "ema_decay"});
  if (j.contains("latent_dim")) gan.latent_dim = get_int(j["latent_dim"], ptr + "/latent_dim");
  if (j.contains("gen_widths")) gan.gen_widths = get_int_list(j["gen_widths"], ptr + "/gen_widths");
  if (j.contains("disc_widths")) gan.disc_widths = get_int_list(j["disc_widths"], ptr + "/disc_widths");
  if (j.contains("epochs")) gan.epochs = get_int(j["epochs"], ptr + "/epochs");
  if (j.contains("batch")) gan.batch = get_int(j["batch"], ptr + "/batch");
  if (j.contains("lr_g")) gan.lr_g = get_number(j["lr_g"], ptr + "/lr_g");
  if (j.contains("lr_d")) gan.lr_d = get_number(j["lr_d"], ptr + "/lr_d");
  if (j.contains("ema_decay")) gan.ema_decay = get_number(j["ema_decay"], ptr + "/ema_decay");
  if (gan.latent_dim < 1 || gan.epochs < 1 || gan.batch < 1 ||
      gan.lr_g <= 0 || gan.lr_d <= 0 ||
      !(gan.ema_decay >= 0.0 && gan.ema_decay < 1.0)) {
    throw ConfigError(ptr, "invalid GAN settings");
  }
  for (int w : gan.gen_widths) {
    if (w < 1) throw ConfigError(ptr + "/gen_widths", "widths must be >= 1");
  }
  for (int w : gan.disc_widths) {
    if (w < 1) throw ConfigError(ptr + "/disc_widths", "widths must be >= 1");
  }
}

void parse_augment(const json& j, const std::string& ptr, AugmentConfig& aug) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"n_samples", "grid_cell_cm"});
  if (j.contains("n_samples")) {
    const int n = get_int(j["n_samples"], ptr + "/n_samples");
    if (n < 0) throw ConfigError(ptr + "/n_samples", "must be >= 0");
    aug.n_samples = static_cast<std::size_t>(n);
  }
  if (j.contains("grid_cell_cm")) {
    aug.grid_cell_cm = get_number(j["grid_cell_cm"], ptr + "/grid_cell_cm");
    if (!(aug.grid_cell_cm > 0)) {
      throw ConfigError(ptr + "/grid_cell_cm", "must be positive");
    }
  }
}

void parse_stress(const json& j, const std::string& ptr, StressConfig& stress) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"enabled", "region", "drop_fraction"});
  if (j.contains("enabled")) stress.enabled = get_bool(j["enabled"], ptr + "/enabled");
  if (j.contains("region")) {
    const auto& r = j["region"];
    expect_object(r, ptr + "/region");
    reject_unknown_keys(r, ptr + "/region", {"min_x", "min_y", "max_x", "max_y"});
    if (r.contains("min_x")) stress.region.min_x = get_number(r["min_x"], ptr + "/region/min_x");
    if (r.contains("min_y")) stress.region.min_y = get_number(r["min_y"], ptr + "/region/min_y");
    if (r.contains("max_x")) stress.region.max_x = get_number(r["max_x"], ptr + "/region/max_x");
    if (r.contains("max_y")) stress.region.max_y = get_number(r["max_y"], ptr + "/region/max_y");
  }
  if (j.contains("drop_fraction")) {
    stress.drop_fraction = get_number(j["drop_fraction"], ptr + "/drop_fraction");
    if (!(stress.drop_fraction >= 0 && stress.drop_fraction <= 1)) {
      throw ConfigError(ptr + "/drop_fraction", "must be in [0, 1]");
    }
  }
}

void parse_report(const json& j, const std::string& ptr, ReportConfig& rep) {
  expect_object(j, ptr);
  reject_unknown_keys(j, ptr, {"hist_bins"});
  if (j.contains("hist_bins")) {
    rep.hist_bins = get_int(j["hist_bins"], ptr + "/hist_bins");
    if (rep.hist_bins < 1) throw ConfigError(ptr + "/hist_bins", "must be >= 1");
  }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  expect_object(j, "");
  reject_unknown_keys(j, "",
                      {"seed", "corpus_file", "room", "lamps", "sensor",
                       "protocol", "split", "localizer", "gan", "augment",
                       "stress", "report"});
  RunConfig cfg;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("/seed", "expected an integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("corpus_file")) {
    cfg.corpus_file = get_string(j["corpus_file"], "/corpus_file");
  }
  if (j.contains("room")) parse_room(j["room"], "/room", cfg.room);
  if (j.contains("lamps")) {
    const auto& lamps = j["lamps"];
    if (!lamps.is_array() || lamps.empty()) {
      throw ConfigError("/lamps", "expected a non-empty array");
    }
    cfg.lamps.clear();
    for (std::size_t i = 0; i < lamps.size(); ++i) {
      cfg.lamps.push_back(
          parse_lamp(lamps[i], "/lamps/" + std::to_string(i)));
    }
  }
  if (j.contains("sensor")) parse_sensor(j["sensor"], "/sensor", cfg.sensor);
  if (j.contains("protocol")) parse_protocol(j["protocol"], "/protocol", cfg.protocol);
  if (j.contains("split")) parse_split(j["split"], "/split", cfg.split);
  if (j.contains("localizer")) parse_localizer(j["localizer"], "/localizer", cfg.localizer);
  if (j.contains("gan")) parse_gan(j["gan"], "/gan", cfg.gan);
  if (j.contains("augment")) parse_augment(j["augment"], "/augment", cfg.augment);
  if (j.contains("stress")) parse_stress(j["stress"], "/stress", cfg.stress);
  if (j.contains("report")) parse_report(j["report"], "/report", cfg.report);

  // Geometry must validate as a whole before any stage runs.
  try {
    const RoomPolygon room = cfg.make_room();
    const ReferenceLayout layout = cfg.make_layout(room);
    for (std::size_t i = 0; i < layout.points.size(); ++i) {
      if (!contains(room, layout.points[i])) {
        throw std::invalid_argument("reference point " + std::to_string(i) +
                                    " lies outside the room");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("/room", e.what());
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  if (!corpus_file.empty()) j["corpus_file"] = corpus_file;
  const RoomPolygon room_poly = make_room();
  json verts = json::array();
  for (const auto& v : room_poly.vertices()) verts.push_back({v.x, v.y});
  j["room"]["vertices"] = std::move(verts);
  const ReferenceLayout layout = make_layout(room_poly);
  json rps = json::array();
  for (const auto& p : layout.points) rps.push_back({p.x, p.y});
  j["room"]["reference_points"] = std::move(rps);
  j["room"]["grid"] = {{"origin_x", room.grid.origin_x},
                       {"origin_y", room.grid.origin_y},
                       {"pitch_x", room.grid.pitch_x},
                       {"pitch_y", room.grid.pitch_y}};
  json lamps_json = json::array();
  for (const auto& lamp : lamps) {
    lamps_json.push_back({{"pos", {lamp.x, lamp.y, lamp.z}},
                          {"emission", lamp.emission.channels},
                          {"lambert_order", lamp.lambert_order}});
  }
  j["lamps"] = std::move(lamps_json);
  j["sensor"] = {{"height_cm", sensor.height_cm},
                 {"noise_rel", sensor.noise_rel},
                 {"ambient", sensor.ambient.channels},
                 {"adc_max", sensor.adc_max}};
  j["protocol"] = {{"dwell_s", protocol.dwell_s}, {"rate_hz", protocol.rate_hz}};
  j["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
  j["localizer"] = {
      {"n_trials", localizer.n_trials},
      {"parallel_trials", localizer.parallel_trials},
      {"space",
       {{"depth_min", localizer.space.depth_min},
        {"depth_max", localizer.space.depth_max},
        {"widths", localizer.space.widths},
        {"dropout", localizer.space.dropout},
        {"lr_log10_min", localizer.space.lr_log10_min},
        {"lr_log10_max", localizer.space.lr_log10_max},
        {"batch", localizer.space.batch},
        {"max_epochs", localizer.space.max_epochs},
        {"patience", localizer.space.patience}}}};
  j["gan"] = {{"latent_dim", gan.latent_dim},
              {"gen_widths", gan.gen_widths},
              {"disc_widths", gan.disc_widths},
              {"epochs", gan.epochs},
              {"batch", gan.batch},
              {"lr_g", gan.lr_g},
              {"lr_d", gan.lr_d},
              {"ema_decay", gan.ema_decay}};
  j["augment"] = {{"n_samples", augment.n_samples},
                  {"grid_cell_cm", augment.grid_cell_cm}};
  j["stress"] = {{"enabled", stress.enabled},
                 {"region",
                  {{"min_x", stress.region.min_x},
                   {"min_y", stress.region.min_y},
                   {"max_x", stress.region.max_x},
                   {"max_y", stress.region.max_y}}},
                 {"drop_fraction", stress.drop_fraction}};
  j["report"] = {{"hist_bins", report.hist_bins}};
  return j.dump(2);
}

RoomPolygon RunConfig::make_room() const {
  if (room.vertices.empty()) {
    return default_room().first;
  }
  return RoomPolygon(room.vertices);
}

ReferenceLayout RunConfig::make_layout(const RoomPolygon& room_poly) const {
  if (!room.reference_points.empty()) {
    ReferenceLayout layout;
    layout.points = room.reference_points;
    layout.spacing_cm = room.grid.pitch_x;
    std::sort(layout.points.begin(), layout.points.end(),
              [](const Position& a, const Position& b) {
                return std::tie(a.x, a.y) < std::tie(b.x, b.y);
              });
    for (std::size_t i = 1; i < layout.points.size(); ++i) {
      if (layout.points[i] == layout.points[i - 1]) {
        throw std::invalid_argument("duplicate reference point");
      }
    }
    return layout;
  }
  return generate_layout(room_poly, room.grid);
}

CoordBox RunConfig::coord_box() const {
  const RoomPolygon room_poly = make_room();
  return {room_poly.bbox_min().x, room_poly.bbox_min().y,
          room_poly.bbox_max().x, room_poly.bbox_max().y};
}

}  // namespace specloc
