#include "qkdnn/surrogate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "qkdnn/errors.hpp"
#include "qkdnn/kernels.hpp"

namespace qkdnn::surrogate {

namespace {

constexpr const char* kMagic = "qkdnn-mlp";
constexpr int kFormatVersion = 1;
constexpr int kStatsValues = 2 * kInputs;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Uniform double in [0, 1) from the raw 64-bit stream (portable across libraries).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

using Input = std::array<double, kInputs>;

/// Activations of one sample; dropout masks already applied to h1/h2 when training.
struct Trace {
  std::array<double, kHidden1> h1{};
  std::array<double, kHidden2> h2{};
  std::array<double, kHidden1> m1{};  // scale factor per unit (0 or 1/keep)
  std::array<double, kHidden2> m2{};
  double out = 0.0;
};

void run_forward(const ModelBundle& m, const double* x, Trace& t, bool with_masks) {
  const Layer& l1 = m.layers[0];
  const Layer& l2 = m.layers[1];
  const Layer& l3 = m.layers[2];
  for (int i = 0; i < kHidden1; ++i) {
    const double v = std::tanh(kernels::dot(&l1.w[static_cast<std::size_t>(i) * kInputs], x, kInputs) +
                               l1.b[static_cast<std::size_t>(i)]);
    t.h1[static_cast<std::size_t>(i)] = with_masks ? v * t.m1[static_cast<std::size_t>(i)] : v;
  }
  for (int j = 0; j < kHidden2; ++j) {
    const double v = sigmoid(kernels::dot(&l2.w[static_cast<std::size_t>(j) * kHidden1], t.h1.data(), kHidden1) +
                             l2.b[static_cast<std::size_t>(j)]);
    t.h2[static_cast<std::size_t>(j)] = with_masks ? v * t.m2[static_cast<std::size_t>(j)] : v;
  }
  t.out = kernels::dot(l3.w.data(), t.h2.data(), kHidden2) + l3.b[0];
}

/// Accumulates d(scale * loss_term)/d(params) for one sample into grads (flat layout).
void run_backward(const ModelBundle& m, const double* x, const Trace& t, double dout, bool with_masks,
                  std::vector<double>& grads) {
  const Layer& l2 = m.layers[1];
  const Layer& l3 = m.layers[2];
  // flat offsets: W1, b1, W2, b2, W3, b3
  const std::size_t b1 = static_cast<std::size_t>(kHidden1) * kInputs;
  const std::size_t w2 = b1 + kHidden1;
  const std::size_t b2 = w2 + static_cast<std::size_t>(kHidden2) * kHidden1;
  const std::size_t w3 = b2 + kHidden2;
  const std::size_t b3 = w3 + kHidden2;
  double* g = grads.data();

  kernels::axpy(dout, t.h2.data(), g + w3, kHidden2);
  g[b3] += dout;

  std::array<double, kHidden2> d2{};
  for (int j = 0; j < kHidden2; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double mask = with_masks ? t.m2[uj] : 1.0;
    if (mask == 0.0) continue;
    const double s = t.h2[uj] / mask;  // undropped sigmoid output
    d2[uj] = dout * l3.w[uj] * mask * s * (1.0 - s);
  }
  std::array<double, kHidden1> gh1{};
  for (int j = 0; j < kHidden2; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    if (d2[uj] == 0.0) continue;
    kernels::axpy(d2[uj], t.h1.data(), g + w2 + uj * kHidden1, kHidden1);
    g[b2 + uj] += d2[uj];
    kernels::axpy(d2[uj], &l2.w[uj * kHidden1], gh1.data(), kHidden1);
  }
  for (int i = 0; i < kHidden1; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double mask = with_masks ? t.m1[ui] : 1.0;
    if (mask == 0.0) continue;
    const double a = t.h1[ui] / mask;  // undropped tanh output
    const double d1 = gh1[ui] * mask * (1.0 - a * a);
    if (d1 == 0.0) continue;
    kernels::axpy(d1, x, g + ui * kInputs, kInputs);
    g[b1 + ui] += d1;
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xffU));
}

double get_le(const std::string& in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(k)])) << (8 * k);
  }
  return std::bit_cast<double>(bits);
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::size_t MlpArchitecture::parameter_count() const {
  std::size_t n = 0;
  for (int k = 0; k < kLayers; ++k) {
    const auto in = static_cast<std::size_t>(sizes[static_cast<std::size_t>(k)]);
    const auto out = static_cast<std::size_t>(sizes[static_cast<std::size_t>(k) + 1]);
    n += in * out + out;
  }
  return n;
}

void LossHyperparams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
}

double LossHyperparams::threshold() const { return -std::log10(epsilon); }

PreprocStats preprocess_fit(std::span<const Features> rows) {
  if (rows.size() < 2) throw InvalidArgument("preprocessing needs at least 2 samples");
  PreprocStats s;
  const auto n = static_cast<double>(rows.size());
  for (int j = 0; j < kInputs; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double first = rows[0][j];
    bool constant = true;
    double sum = 0.0;
    for (const Features& r : rows) {
      sum += r[j];
      constant = constant && r[j] == first;
    }
    if (constant) {
      s.means[uj] = first;
      s.sigmas[uj] = 0.0;
      s.pass_through[uj] = true;
      continue;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const Features& r : rows) ss += (r[j] - mean) * (r[j] - mean);
    s.means[uj] = mean;
    s.sigmas[uj] = std::sqrt(ss / n);
    s.pass_through[uj] = s.sigmas[uj] == 0.0;
  }
  return s;
}

std::array<double, kInputs> preprocess_apply(const Features& x, const PreprocStats& stats) {
  std::array<double, kInputs> out{};
  for (int j = 0; j < kInputs; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    out[uj] = stats.pass_through[uj] ? x[j] : (x[j] - stats.means[uj]) / stats.sigmas[uj];
  }
  return out;
}

double label_transform(double key_rate) {
  if (!(key_rate > 0.0) || !std::isfinite(key_rate)) throw InvalidArgument("key rate label must be positive");
  return -std::log10(key_rate);
}

double label_inverse(double y_star) { return std::pow(10.0, -y_star); }

ModelBundle zero_model() {
  ModelBundle m;
  for (int k = 0; k < kLayers; ++k) {
    Layer& l = m.layers[static_cast<std::size_t>(k)];
    l.in = m.arch.sizes[static_cast<std::size_t>(k)];
    l.out = m.arch.sizes[static_cast<std::size_t>(k) + 1];
    l.w.assign(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out), 0.0);
    l.b.assign(static_cast<std::size_t>(l.out), 0.0);
  }
  for (std::size_t j = 0; j < kInputs; ++j) m.preproc.sigmas[j] = 1.0;
  return m;
}

void initialize_weights(ModelBundle& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Layer& l : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (double& w : l.w) w = limit * (2.0 * uniform01(rng) - 1.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void check_shapes(const ModelBundle& m) {
  if (m.arch.sizes != MlpArchitecture{}.sizes) throw ModelCorruption("unexpected network architecture");
  for (int k = 0; k < kLayers; ++k) {
    const Layer& l = m.layers[static_cast<std::size_t>(k)];
    if (l.in != m.arch.sizes[static_cast<std::size_t>(k)] || l.out != m.arch.sizes[static_cast<std::size_t>(k) + 1] ||
        l.w.size() != static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out) ||
        l.b.size() != static_cast<std::size_t>(l.out)) {
      throw ModelCorruption("layer " + std::to_string(k) + " has the wrong shape");
    }
  }
}

double forward(const ModelBundle& model, std::span<const double> x_star) {
  if (x_star.size() != static_cast<std::size_t>(kInputs)) throw ModelCorruption("input width differs from the network");
  check_shapes(model);
  Trace t;
  run_forward(model, x_star.data(), t, false);
  return t.out;
}

double loss_term(double e, const LossHyperparams& hp) {
  return hp.gamma * (e * e + std::max(e, hp.threshold())) - (1.0 - hp.gamma) * std::min(e, 0.0);
}

double loss(std::span<const double> errors, const LossHyperparams& hp) {
  if (errors.empty()) throw InvalidArgument("loss needs at least one error term");
  double acc = 0.0;
  for (double e : errors) acc += loss_term(e, hp);
  return acc / static_cast<double>(errors.size());
}

double loss_subgradient(double e, const LossHyperparams& hp) {
  const double dmax = e > hp.threshold() ? 1.0 : 0.0;
  const double dmin = e < 0.0 ? 1.0 : 0.0;
  return hp.gamma * (2.0 * e + dmax) - (1.0 - hp.gamma) * dmin;
}

std::vector<double> flatten(const ModelBundle& m) {
  std::vector<double> p;
  p.reserve(m.arch.parameter_count());
  for (const Layer& l : m.layers) {
    p.insert(p.end(), l.w.begin(), l.w.end());
    p.insert(p.end(), l.b.begin(), l.b.end());
  }
  return p;
}

void unflatten(ModelBundle& m, std::span<const double> p) {
  if (p.size() != m.arch.parameter_count()) throw ModelCorruption("parameter count differs from the network");
  std::size_t k = 0;
  for (Layer& l : m.layers) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), l.w.size(), l.w.begin());
    k += l.w.size();
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), l.b.size(), l.b.begin());
    k += l.b.size();
  }
}

std::vector<double> loss_gradient(const ModelBundle& model, std::span<const Input> x_star,
                                  std::span<const double> y_star) {
  check_shapes(model);
  if (x_star.size() != y_star.size() || x_star.empty()) throw InvalidArgument("batch inputs and targets differ in size");
  std::vector<double> grads(model.arch.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(x_star.size());
  Trace t;
  for (std::size_t s = 0; s < x_star.size(); ++s) {
    run_forward(model, x_star[s].data(), t, false);
    const double dout = scale * loss_subgradient(t.out - y_star[s], model.loss_hp);
    run_backward(model, x_star[s].data(), t, dout, false, grads);
  }
  return grads;
}

TrainResult train(std::span<const Features> features, std::span<const double> key_rates, const LossHyperparams& hp,
                  const TrainOptions& opt, const std::function<void(const EpochRecord&)>& on_epoch) {
  hp.validate();
  if (features.empty()) throw InvalidArgument("training set is empty");
  if (features.size() != key_rates.size()) throw InvalidArgument("features and labels differ in count");
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.patience < 1) throw InvalidArgument("bad training schedule");
  if (!(opt.learning_rate > 0.0) || !(opt.dropout >= 0.0 && opt.dropout < 1.0) ||
      !(opt.validation_fraction >= 0.0 && opt.validation_fraction < 1.0)) {
    throw InvalidArgument("bad optimizer settings");
  }

  TrainResult result;
  ModelBundle& model = result.model;
  model = zero_model();
  model.loss_hp = hp;
  model.meta.seed = opt.seed;
  model.preproc = preprocess_fit(features);
  initialize_weights(model, opt.seed);

  const std::size_t n = features.size();
  std::vector<Input> xs(n);
  std::vector<double> ys(n);
  model.meta.xi_min = std::numeric_limits<double>::infinity();
  model.meta.xi_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = preprocess_apply(features[i], model.preproc);
    ys[i] = label_transform(key_rates[i]);
    model.meta.xi_min = std::min(model.meta.xi_min, features[i][channel::kXiFeature]);
    model.meta.xi_max = std::max(model.meta.xi_max, features[i][channel::kXiFeature]);
  }

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(opt.validation_fraction * static_cast<double>(n)));
  if (opt.validation_fraction > 0.0 && n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  auto mean_loss = [&](const std::vector<std::size_t>& idx) {
    Trace t;
    double acc = 0.0;
    for (std::size_t i : idx) {
      run_forward(model, xs[i].data(), t, false);
      acc += loss_term(t.out - ys[i], hp);
    }
    return acc / static_cast<double>(idx.size());
  };

  const std::size_t np = model.arch.parameter_count();
  std::vector<double> params = flatten(model);
  std::vector<double> m1(np, 0.0), m2(np, 0.0), grads(np, 0.0);
  std::vector<double> best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::uint64_t step = 0;
  const double keep = 1.0 - opt.dropout;
  const double inv_keep = 1.0 / keep;
  Trace t;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    shuffle(train_idx, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(opt.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = train_idx[k];
        for (double& v : t.m1) v = uniform01(rng) < keep ? inv_keep : 0.0;
        for (double& v : t.m2) v = uniform01(rng) < keep ? inv_keep : 0.0;
        run_forward(model, xs[i].data(), t, true);
        const double e = t.out - ys[i];
        epoch_loss += loss_term(e, hp);
        const double dout = scale * loss_subgradient(e, hp);
            run_backward(model, xs[i].data(), t, dout, true, grads);
      }
      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < np; ++p) {
        m1[p] = opt.beta1 * m1[p] + (1.0 - opt.beta1) * grads[p];
        m2[p] = opt.beta2 * m2[p] + (1.0 - opt.beta2) * grads[p] * grads[p];
        params[p] -= opt.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + opt.adam_eps);
      }
      unflatten(model, params);
    }

    EpochRecord rec{epoch, epoch_loss / static_cast<double>(train_idx.size()),
                    val_idx.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_loss(val_idx)};
    const double monitored = val_idx.empty() ? mean_loss(train_idx) : rec.validation_loss;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(monitored)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << "; train loss trace:";
      for (const EpochRecord& r : result.log) msg << ' ' << r.train_loss;
      throw TrainingFailure(msg.str());
    }
    model.meta.epochs_run = epoch;
    if (monitored < best_val) {
      best_val = monitored;
      best = params;
      model.meta.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }
  unflatten(model, best);
  model.meta.final_validation_loss = best_val;
  return result;
}

double predict(const ModelBundle& model, const Features& x) {
  const Input xs = preprocess_apply(x, model.preproc);
  return label_inverse(forward(model, xs));
}

std::vector<double> predict_batch(const ModelBundle& model, std::span<const Features> xs) {
  check_shapes(model);
  std::vector<double> out(xs.size());
  Trace t;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Input x = preprocess_apply(xs[i], model.preproc);
    run_forward(model, x.data(), t, false);
    out[i] = label_inverse(t.out);
  }
  return out;
}

void save_model(const ModelBundle& model, std::ostream& out) {
  check_shapes(model);
  std::string blob;
  blob.reserve(8 * (model.arch.parameter_count() + kStatsValues));
  for (double v : flatten(model)) put_le(blob, v);
  for (double v : model.preproc.means) put_le(blob, v);
  for (double v : model.preproc.sigmas) put_le(blob, v);

  std::ostringstream h;
  h << kMagic << ' ' << kFormatVersion << '\n';
  h << "sizes";
  for (int s : model.arch.sizes) h << ' ' << s;
  h << "\nactivations tanh sigmoid linear\n";
  h << "gamma " << fmt17(model.loss_hp.gamma) << '\n';
  h << "epsilon " << fmt17(model.loss_hp.epsilon) << '\n';
  h << "seed " << model.meta.seed << '\n';
  h << "epochs_run " << model.meta.epochs_run << '\n';
  h << "best_epoch " << model.meta.best_epoch << '\n';
  h << "final_validation_loss " << fmt17(model.meta.final_validation_loss) << '\n';
  h << "xi_band " << fmt17(model.meta.xi_min) << ' ' << fmt17(model.meta.xi_max) << '\n';
  h << "parameters " << model.arch.parameter_count() << '\n';
  h << "stats " << kStatsValues << '\n';
  h << "checksum " << std::hex << fnv1a(blob) << std::dec << '\n';
  h << "blob\n";
  out << h.str();
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("failed to write model");
}

ModelBundle load_model(std::istream& in) {
  auto expect_line = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw ModelCorruption("model header truncated before '" + key + "'");
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != key) throw ModelCorruption("model header: expected '" + key + "', got '" + got + "'");
    std::string rest;
    std::getline(ls, rest);
    return std::istringstream(rest);
  };
  auto parse_double = [](std::istringstream& s, const char* what) {
    std::string tok;
    s >> tok;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0') throw ModelCorruption(std::string("model header: bad ") + what);
    return v;
  };

  ModelBundle m = zero_model();
  {
    auto s = expect_line(kMagic);
    int version = 0;
    if (!(s >> version) || version != kFormatVersion) throw ModelCorruption("unsupported model format version");
  }
  {
    auto s = expect_line("sizes");
    for (int& v : m.arch.sizes) {
      if (!(s >> v)) throw ModelCorruption("model header: bad sizes");
    }
    check_shapes(m);
  }
  {
    auto s = expect_line("activations");
    std::string a, b, c;
    s >> a >> b >> c;
    if (a != "tanh" || b != "sigmoid" || c != "linear") throw ModelCorruption("unexpected activations");
  }
  {
    auto s = expect_line("gamma");
    m.loss_hp.gamma = parse_double(s, "gamma");
  }
  {
    auto s = expect_line("epsilon");
    m.loss_hp.epsilon = parse_double(s, "epsilon");
  }
  {
    auto s = expect_line("seed");
    if (!(s >> m.meta.seed)) throw ModelCorruption("model header: bad seed");
  }
  {
    auto s = expect_line("epochs_run");
    if (!(s >> m.meta.epochs_run)) throw ModelCorruption("model header: bad epochs_run");
  }
  {
    auto s = expect_line("best_epoch");
    if (!(s >> m.meta.best_epoch)) throw ModelCorruption("model header: bad best_epoch");
  }
  {
    auto s = expect_line("final_validation_loss");
    m.meta.final_validation_loss = parse_double(s, "final_validation_loss");
  }
  {
    auto s = expect_line("xi_band");
    m.meta.xi_min = parse_double(s, "xi_band");
    m.meta.xi_max = parse_double(s, "xi_band");
  }
  std::size_t n_params = 0, n_stats = 0;
  {
    auto s = expect_line("parameters");
    if (!(s >> n_params) || n_params != m.arch.parameter_count()) throw ModelCorruption("parameter count mismatch");
  }
  {
    auto s = expect_line("stats");
    if (!(s >> n_stats) || n_stats != static_cast<std::size_t>(kStatsValues)) throw ModelCorruption("stats count mismatch");
  }
  std::uint64_t checksum = 0;
  {
    auto s = expect_line("checksum");
    if (!(s >> std::hex >> checksum)) throw ModelCorruption("model header: bad checksum");
  }
  expect_line("blob");

  const std::size_t bytes = 8 * (n_params + n_stats);
  std::string blob(bytes, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) throw ModelCorruption("model weight blob truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw ModelCorruption("trailing bytes after model weights");
  if (fnv1a(blob) != checksum) throw ModelCorruption("model checksum mismatch");

  std::vector<double> params(n_params);
  for (std::size_t k = 0; k < n_params; ++k) params[k] = get_le(blob, 8 * k);
  unflatten(m, params);
  for (std::size_t j = 0; j < kInputs; ++j) {
    m.preproc.means[j] = get_le(blob, 8 * (n_params + j));
    m.preproc.sigmas[j] = get_le(blob, 8 * (n_params + kInputs + j));
    if (!(m.preproc.sigmas[j] >= 0.0)) throw ModelCorruption("negative preprocessing sigma");
    m.preproc.pass_through[j] = m.preproc.sigmas[j] == 0.0;
  }
  return m;
}

void save_model(const ModelBundle& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    save_model(model, out);
    out.flush();
    if (!out) throw Error("failed to write " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move model into place at " + path);
  }
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  return load_model(in);
}

}  // namespace qkdnn::surrogate
