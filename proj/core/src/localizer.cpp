#include "specloc/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "specloc/numfmt.hpp"

namespace specloc {

FeatureScaler FeatureScaler::fit(const Dataset& train) {
  if (train.empty()) {
    throw std::invalid_argument("cannot fit scaler on empty data");
  }
  FeatureScaler sc;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    sc.min[c] = sc.max[c] = train.samples.front().spectrum[c];
  }
  for (const auto& s : train.samples) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      sc.min[c] = std::min(sc.min[c], s.spectrum[c]);
      sc.max[c] = std::max(sc.max[c], s.spectrum[c]);
    }
  }
  return sc;
}

std::vector<double> FeatureScaler::transform(const Spectrum& s) const {
  std::vector<double> out(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double range = max[c] - min[c];
    out[c] = range > 0.0 ? (s[c] - min[c]) / range : 0.0;
  }
  return out;
}

std::array<double, 2> CoordBox::normalize(const Position& p) const {
  const double w = max_x - min_x;
  const double h = max_y - min_y;
  return {(p.x - min_x) / w, (p.y - min_y) / h};
}

Position CoordBox::denormalize(double nx, double ny) const {
  return {min_x + nx * (max_x - min_x), min_y + ny * (max_y - min_y)};
}

SplitResult split(const Dataset& ds, const SplitFractions& fractions,
                  std::uint64_t seed) {
  const double fsum = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(fsum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "split fractions must be non-negative and sum to 1");
  }
  // Group indices by reference point (or by position for unlabeled rows),
  // in canonical order.
  std::map<std::tuple<double, double, std::optional<int>>,
           std::vector<std::size_t>>
      groups;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    groups[{s.position.x, s.position.y, s.rp_id}].push_back(i);
  }
  Rng rng(seed);
  std::vector<LabeledSample> train, val, test;
  for (auto& [key, idx] : groups) {
    const std::size_t n = idx.size();
    if (n < 3) {
      throw std::invalid_argument(
          "reference point with fewer than 3 samples cannot be split");
    }
    rng.shuffle(idx);
    std::size_t n_train =
        static_cast<std::size_t>(std::floor(fractions.train * n));
    std::size_t n_val = static_cast<std::size_t>(std::floor(fractions.val * n));
    std::size_t n_test =
        static_cast<std::size_t>(std::floor(fractions.test * n));
    // Hand out remainders to train, then val, then test.
    std::size_t rem = n - (n_train + n_val + n_test);
    while (rem > 0) {
      if (rem > 0) { ++n_train; --rem; }
      if (rem > 0) { ++n_val; --rem; }
      if (rem > 0) { ++n_test; --rem; }
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < n_train; ++j) train.push_back(ds.samples[idx[k++]]);
    for (std::size_t j = 0; j < n_val; ++j) val.push_back(ds.samples[idx[k++]]);
    for (std::size_t j = 0; j < n_test; ++j) test.push_back(ds.samples[idx[k++]]);
  }
  SplitResult res;
  res.train = Dataset::from_samples(std::move(train), ds.provenance);
  res.val = Dataset::from_samples(std::move(val), ds.provenance);
  res.test = Dataset::from_samples(std::move(test), ds.provenance);
  return res;
}

namespace {

constexpr std::uint64_t kLoopSeedSalt = 0xD1B54A32D192ED03ull;

struct Encoded {
  std::vector<std::vector<double>> inputs;
  std::vector<std::array<double, 2>> targets;
};

Encoded encode(const Dataset& ds, const FeatureScaler& scaler,
               const CoordBox& coords) {
  Encoded e;
  e.inputs.reserve(ds.size());
  e.targets.reserve(ds.size());
  for (const auto& s : ds.samples) {
    e.inputs.push_back(scaler.transform(s.spectrum));
    e.targets.push_back(coords.normalize(s.position));
  }
  return e;
}

double val_error_cm(const DenseNet& net, const Encoded& val,
                    const CoordBox& coords, const Dataset& val_ds) {
  double total = 0.0;
  for (std::size_t i = 0; i < val.inputs.size(); ++i) {
    const auto out = forward_eval(net, val.inputs[i]).output;
    const Position pred = coords.denormalize(out[0], out[1]);
    const Position truth = val_ds.samples[i].position;
    total += std::hypot(pred.x - truth.x, pred.y - truth.y);
  }
  return total / static_cast<double>(val.inputs.size());
}

}  // namespace

TrainedLocalizer train_localizer(const Dataset& train, const Dataset& val,
                                 const HyperParams& hp, const CoordBox& coords,
                                 std::uint64_t seed) {
  if (train.empty() || val.empty()) {
    throw std::invalid_argument("train and val must be non-empty");
  }
  if (hp.lr <= 0 || hp.batch < 1 || hp.max_epochs < 1 || hp.patience < 1) {
    throw std::invalid_argument("invalid hyperparameters");
  }
  for (int w : hp.hidden) {
    if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
  if (!(coords.max_x > coords.min_x && coords.max_y > coords.min_y)) {
    throw std::invalid_argument("degenerate coordinate box");
  }

  TrainedLocalizer model;
  model.scaler = FeatureScaler::fit(train);
  model.coords = coords;

  std::vector<int> layers;
  layers.push_back(static_cast<int>(kNumChannels));
  layers.insert(layers.end(), hp.hidden.begin(), hp.hidden.end());
  layers.push_back(2);
  DenseNet net = init_net(layers, Activation::relu, Activation::identity,
                          hp.dropout, seed);
  AdamState adam = AdamState::for_net(net, hp.lr);
  Rng loop_rng(seed ^ kLoopSeedSalt);

  const Encoded enc_train = encode(train, model.scaler, coords);
  const Encoded enc_val = encode(val, model.scaler, coords);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  DenseNet best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int stale = 0;
  std::vector<double> curve;

  int epoch = 0;
  for (; epoch < hp.max_epochs; ++epoch) {
    loop_rng.shuffle(order);
    for (std::size_t start = 0, batch_no = 0; start < order.size();
         start += static_cast<std::size_t>(hp.batch), ++batch_no) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(hp.batch));
      Gradients acc = Gradients::zeros_like(net);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const ForwardCache cache =
            forward_train(net, enc_train.inputs[i], loop_rng);
        const auto loss = mse_loss(
            cache.output, {enc_train.targets[i][0], enc_train.targets[i][1]});
        batch_loss += loss.value;
        acc.add(backward(net, cache, loss.grad));
      }
      const double bn = static_cast<double>(end - start);
      batch_loss /= bn;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_no));
      }
      acc.scale(1.0 / bn);
      adam_step(net, acc, adam);
    }
    const double err = val_error_cm(net, enc_val, coords, val);
    curve.push_back(err);
    if (err < best_val) {
      best_val = err;
      best = net;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= hp.patience) {
      ++epoch;
      break;
    }
  }

  model.net = std::move(best);
  model.meta.seed = seed;
  model.meta.hp = hp;
  model.meta.best_val_cm = best_val;
  model.meta.best_epoch = best_epoch;
  model.meta.epochs_run = epoch;
  model.meta.val_curve_cm = std::move(curve);
  return model;
}

Position predict(const TrainedLocalizer& model, const Spectrum& s) {
  validate_spectrum(s, /*check_adc=*/false);
  const auto out = forward_eval(model.net, model.scaler.transform(s)).output;
  const Position p = model.coords.denormalize(out[0], out[1]);
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw std::runtime_error("non-finite prediction");
  }
  return p;
}

double mean_euclidean_cm(const TrainedLocalizer& model, const Dataset& ds) {
  if (ds.empty()) {
    throw std::invalid_argument("cannot evaluate on empty data");
  }
  double total = 0.0;
  for (const auto& s : ds.samples) {
    const Position pred = predict(model, s.spectrum);
    total += std::hypot(pred.x - s.position.x, pred.y - s.position.y);
  }
  return total / static_cast<double>(ds.size());
}

namespace {

HyperParams draw_hyperparams(const SearchSpace& space, Rng& rng) {
  HyperParams hp;
  const int depth = rng.uniform_int(space.depth_min, space.depth_max);
  hp.hidden.clear();
  for (int d = 0; d < depth; ++d) {
    hp.hidden.push_back(space.widths[rng.uniform_index(space.widths.size())]);
  }
  hp.dropout = space.dropout[rng.uniform_index(space.dropout.size())];
  hp.lr = std::pow(10.0, rng.uniform(space.lr_log10_min, space.lr_log10_max));
  hp.batch = space.batch[rng.uniform_index(space.batch.size())];
  hp.max_epochs = space.max_epochs;
  hp.patience = space.patience;
  return hp;
}

}  // namespace

SearchResult random_search(const Dataset& train, const Dataset& val,
                           const SearchSpace& space, int n_trials,
                           const CoordBox& coords, std::uint64_t seed,
                           bool parallel) {
  if (n_trials < 1) {
    throw std::invalid_argument("n_trials must be >= 1");
  }
  if (space.depth_min < 1 || space.depth_max < space.depth_min ||
      space.widths.empty() || space.dropout.empty() || space.batch.empty()) {
    throw std::invalid_argument("invalid search space");
  }

  struct TrialOutcome {
    TrialRecord record;
    TrainedLocalizer model;
  };

  auto run_trial = [&](int index) {
    const std::uint64_t trial_seed =
        seed ^ static_cast<std::uint64_t>(index);
    TrialOutcome out;
    out.record.index = index;
    Rng hp_rng(trial_seed);
    out.record.hp = draw_hyperparams(space, hp_rng);
    try {
      out.model =
          train_localizer(train, val, out.record.hp, coords, trial_seed);
      out.record.val_err_cm = out.model.meta.best_val_cm;
      out.record.ok = true;
    } catch (const std::exception& e) {
      out.record.ok = false;
      out.record.error = e.what();
    }
    return out;
  };

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_trials));
  if (parallel && n_trials > 1) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    // Waves of hardware_concurrency trials; outcomes land by index so the
    // schedule cannot change the result.
    for (int base = 0; base < n_trials; base += static_cast<int>(hw)) {
      std::vector<std::future<TrialOutcome>> wave;
      const int end = std::min(n_trials, base + static_cast<int>(hw));
      for (int i = base; i < end; ++i) {
        wave.push_back(
            std::async(std::launch::async, [&, i] { return run_trial(i); }));
      }
      for (int i = base; i < end; ++i) {
        outcomes[static_cast<std::size_t>(i)] =
            wave[static_cast<std::size_t>(i - base)].get();
      }
    }
  } else {
    for (int i = 0; i < n_trials; ++i) {
      outcomes[static_cast<std::size_t>(i)] = run_trial(i);
    }
  }

  SearchResult res;
  int best_index = -1;
  for (auto& out : outcomes) {
    res.log.push_back(out.record);
    if (out.record.ok &&
        (best_index < 0 ||
         out.record.val_err_cm < res.log[static_cast<std::size_t>(best_index)]
                                     .val_err_cm)) {
      best_index = out.record.index;
    }
  }
  if (best_index < 0) {
    throw std::runtime_error("random_search: every trial failed");
  }
  res.best = outcomes[static_cast<std::size_t>(best_index)].record.hp;
  res.model = std::move(outcomes[static_cast<std::size_t>(best_index)].model);
  return res;
}

void save_trial_log_csv(const std::vector<TrialRecord>& log,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "trial,layers,dropout,lr,batch,val_err_cm\n";
  for (const auto& t : log) {
    out << t.index << ',';
    for (std::size_t i = 0; i < t.hp.hidden.size(); ++i) {
      out << t.hp.hidden[i] << (i + 1 < t.hp.hidden.size() ? "x" : "");
    }
    out << ',' << format_double(t.hp.dropout) << ',' << format_double(t.hp.lr)
        << ',' << t.hp.batch << ',';
    if (t.ok) {
      out << format_double(t.val_err_cm);
    } else {
      out << "failed";
    }
    out << '\n';
  }
}

namespace {

constexpr int kLocalizerFormatVersion = 1;

}  // namespace

std::string localizer_to_json_text(const TrainedLocalizer& model) {
  nlohmann::json j;
  j["format_version"] = kLocalizerFormatVersion;
  j["net"] = nlohmann::json::parse(net_to_json_text(model.net));
  j["scaler"]["min"] = model.scaler.min;
  j["scaler"]["max"] = model.scaler.max;
  j["coords"] = {{"min_x", model.coords.min_x},
                 {"min_y", model.coords.min_y},
                 {"max_x", model.coords.max_x},
                 {"max_y", model.coords.max_y}};
  j["meta"] = {{"seed", model.meta.seed},
               {"hidden", model.meta.hp.hidden},
               {"dropout", model.meta.hp.dropout},
               {"lr", model.meta.hp.lr},
               {"batch", model.meta.hp.batch},
               {"max_epochs", model.meta.hp.max_epochs},
               {"patience", model.meta.hp.patience},
               {"best_val_cm", model.meta.best_val_cm},
               {"best_epoch", model.meta.best_epoch},
               {"epochs_run", model.meta.epochs_run},
               {"val_curve_cm", model.meta.val_curve_cm}};
  return j.dump(2);
}

TrainedLocalizer localizer_from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("format_version").get<int>() != kLocalizerFormatVersion) {
    throw std::runtime_error("unsupported localizer format version");
  }
  TrainedLocalizer model;
  model.net = net_from_json_text(j.at("net").dump());
  const auto min = j.at("scaler").at("min").get<std::vector<double>>();
  const auto max = j.at("scaler").at("max").get<std::vector<double>>();
  if (min.size() != kNumChannels || max.size() != kNumChannels) {
    throw std::runtime_error("scaler size mismatch in artifact");
  }
  std::copy(min.begin(), min.end(), model.scaler.min.begin());
  std::copy(max.begin(), max.end(), model.scaler.max.begin());
  const auto& c = j.at("coords");
  model.coords = {c.at("min_x").get<double>(), c.at("min_y").get<double>(),
                  c.at("max_x").get<double>(), c.at("max_y").get<double>()};
  const auto& m = j.at("meta");
  model.meta.seed = m.at("seed").get<std::uint64_t>();
  model.meta.hp.hidden = m.at("hidden").get<std::vector<int>>();
  model.meta.hp.dropout = m.at("dropout").get<double>();
  model.meta.hp.lr = m.at("lr").get<double>();
  model.meta.hp.batch = m.at("batch").get<int>();
  model.meta.hp.max_epochs = m.at("max_epochs").get<int>();
  model.meta.hp.patience = m.at("patience").get<int>();
  model.meta.best_val_cm = m.at("best_val_cm").get<double>();
  model.meta.best_epoch = m.at("best_epoch").get<int>();
  model.meta.epochs_run = m.at("epochs_run").get<int>();
  model.meta.val_curve_cm = m.at("val_curve_cm").get<std::vector<double>>();
  if (model.net.input_size() != static_cast<int>(kNumChannels) ||
      model.net.output_size() != 2) {
    throw std::runtime_error("localizer net must map 11 channels to 2 coords");
  }
  return model;
}

void save_localizer(const TrainedLocalizer& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << localizer_to_json_text(model) << '\n';
}

TrainedLocalizer load_localizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return localizer_from_json_text(buf.str());
}

}  // namespace specloc
