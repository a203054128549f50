#include "qkdnn/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace qkdnn::datagen {

namespace {

namespace fs = std::filesystem;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed to write " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move output into place at " + path);
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParseError("bad number '" + s + "' in column " + column, line);
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<double> linspace_step(double first, double last, double step) {
  if (!(step > 0.0) || last < first) throw InvalidArgument("bad range");
  const auto n = static_cast<long>(std::llround((last - first) / step));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) {
    // snap to 12 decimals: 0.35 + 3 * 0.01 should print as 0.38
    out.push_back(std::round((first + static_cast<double>(k) * step) * 1e12) / 1e12);
  }
  return out;
}

void GridSpec::validate() const {
  if (xi_values.empty() && extra_bands.empty()) throw InvalidArgument("grid has no noise values");
  if (!xi_values.empty() && L_values.empty()) throw InvalidArgument("grid has no distances");
  if (samplings_per_point < 1 || instances_per_sampling < 1) throw InvalidArgument("sampling counts must be positive");
  if (mu_sweep.empty()) throw InvalidArgument("mu sweep is empty");
  if (static_cast<std::size_t>(instances_per_sampling) > mu_sweep.size()) {
    throw InvalidArgument("instances_per_sampling exceeds the mu sweep length");
  }
  if (!(xi_jitter >= 0.0)) throw InvalidArgument("xi_jitter must be nonnegative");
  if (restart_budget < 1) throw InvalidArgument("restart_budget must be positive");
  channel::ProtocolParams p = base;
  p.nc = nc;
  for (double mu : mu_sweep) {
    p.mu = mu;
    p.validate();
  }
  for (double L : L_values) {
    if (L < 0.0) throw InvalidArgument("negative distance in grid");
  }
}

std::string GridSpec::fingerprint() const {
  std::ostringstream os;
  auto list = [&](const char* key, const std::vector<double>& v) {
    os << key;
    for (double x : v) os << ' ' << fmt17(x);
    os << '\n';
  };
  list("xi_values", xi_values);
  list("L_values", L_values);
  for (const NoiseBand& b : extra_bands) {
    os << "band " << fmt17(b.xi) << '\n';
    list("band_L", b.L_values);
  }
  os << "samplings " << samplings_per_point << "\ninstances " << instances_per_sampling << "\njitter "
     << fmt17(xi_jitter) << '\n';
  list("mu_sweep", mu_sweep);
  os << "nc " << nc << "\nseed " << master_seed << "\nrestarts " << restart_budget << "\nprobs";
  for (double p : base.probs) os << ' ' << fmt17(p);
  os << "\nbeta " << fmt17(base.beta) << "\ndelta_c " << fmt17(base.delta_c) << '\n';
  return os.str();
}

GridSpec paper_grid() {
  GridSpec s;
  s.xi_values = linspace_step(0.002, 0.014, 0.001);
  s.L_values = linspace_step(5, 100, 5);
  s.extra_bands = {NoiseBand{0.015, linspace_step(5, 80, 5)}};
  s.mu_sweep = linspace_step(0.35, 0.60, 0.01);
  s.nc = 10;
  return s;
}

GridSpec desk_grid() {
  GridSpec s;
  s.xi_values = {0.002, 0.004};
  s.L_values = {5, 10, 20, 30};
  s.samplings_per_point = 4;
  s.instances_per_sampling = 5;
  s.mu_sweep = linspace_step(0.35, 0.60, 0.05);
  s.nc = 3;
  return s;
}

GridSpec reduced_grid() {
  GridSpec s;
  s.xi_values = linspace_step(0.002, 0.005, 0.001);
  s.L_values = linspace_step(5, 60, 5);
  s.samplings_per_point = 4;
  s.instances_per_sampling = 25;
  s.mu_sweep = linspace_step(0.35, 0.60, 0.01);
  s.nc = 4;
  return s;
}

GridSpec preset(const std::string& name) {
  if (name == "paper") return paper_grid();
  if (name == "desk") return desk_grid();
  if (name == "reduced") return reduced_grid();
  throw InvalidArgument("unknown grid preset '" + name + "' (expected paper, desk or reduced)");
}

std::vector<GridPoint> grid_points(const GridSpec& spec) {
  std::vector<GridPoint> out;
  for (double xi : spec.xi_values) {
    for (double L : spec.L_values) out.push_back({xi, L});
  }
  for (const NoiseBand& b : spec.extra_bands) {
    for (double L : b.L_values) out.push_back({b.xi, L});
  }
  return out;
}

SolveFn default_solver() {
  return [](const channel::ProtocolParams& p) { return solver::key_rate(p); };
}

std::uint64_t sampling_seed(std::uint64_t master_seed, const GridPoint& point, int sampling) {
  std::uint64_t h = splitmix(master_seed);
  h = splitmix(h ^ std::bit_cast<std::uint64_t>(point.xi_grid));
  h = splitmix(h ^ std::bit_cast<std::uint64_t>(point.L));
  return splitmix(h ^ static_cast<std::uint64_t>(sampling));
}

Dataset sample_grid_point(const GridSpec& spec, const GridPoint& point, const SolveFn& solve) {
  spec.validate();
  Dataset out;
  out.reserve(static_cast<std::size_t>(spec.samplings_per_point * spec.instances_per_sampling));
  const auto keep = static_cast<std::size_t>(spec.instances_per_sampling);

  for (int s = 0; s < spec.samplings_per_point; ++s) {
    std::mt19937_64 rng(sampling_seed(spec.master_seed, point, s));
    bool filled = false;
    for (int attempt = 0; attempt < spec.restart_budget && !filled; ++attempt) {
      const double xi = std::max(0.0, point.xi_grid + spec.xi_jitter * (2.0 * uniform01(rng) - 1.0));
      Dataset candidates;
      for (double mu : spec.mu_sweep) {
        channel::ProtocolParams p = spec.base;
        p.L = point.L;
        p.mu = mu;
        p.xi = xi;
        p.nc = spec.nc;
        solver::KeyRateReport r;
        try {
          r = solve(p);
        } catch (const Error&) {
          continue;  // unsolvable instance counts as a non-positive rate
        }
        if (!(r.key_rate > 0.0) || r.status == solver::SolveStatus::infeasible) continue;
        candidates.push_back(Sample{channel::assemble_features(p), r.key_rate,
                                    Provenance{point.xi_grid, point.L, xi, mu, solver::to_string(r.status), spec.nc}});
      }
      if (candidates.size() < keep) continue;
      std::vector<std::size_t> idx(candidates.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return candidates[a].label > candidates[b].label; });
      idx.resize(keep);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) out.push_back(std::move(candidates[i]));
      filled = true;
    }
    if (!filled) {
      std::ostringstream msg;
      msg << "grid point xi=" << point.xi_grid << " L=" << point.L << ": sampling " << s << " found fewer than "
          << keep << " positive rates in " << spec.restart_budget << " draws";
      throw GridPointFailure(msg.str(), point);
    }
  }
  return out;
}

int default_threads() {
  if (const char* env = std::getenv("QKDNN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

Dataset generate_dataset(const GridSpec& spec, const SolveFn& solve, const GenerateOptions& options) {
  spec.validate();
  const std::vector<GridPoint> points = grid_points(spec);
  const std::string fingerprint = spec.fingerprint();
  std::vector<Dataset> parts(points.size());
  std::vector<bool> done(points.size(), false);

  auto part_path = [&](std::size_t i, const char* ext) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%05zu.%s", i, ext);
    return (fs::path(*options.work_dir) / name).string();
  };

  std::mutex mu;
  std::size_t finished = 0;
  if (options.work_dir) {
    fs::create_directories(*options.work_dir);
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::ifstream marker(part_path(i, "done"));
      if (!marker) continue;
      std::stringstream content;
      content << marker.rdbuf();
      if (content.str() != fingerprint) continue;
      parts[i] = load_dataset(part_path(i, "csv"));
      done[i] = true;
      ++finished;
      if (options.progress) options.progress(finished, points.size(), points[i], true);
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size() || stop.load()) return;
      if (done[i]) continue;
      try {
        Dataset d = sample_grid_point(spec, points[i], solve);
        if (options.work_dir) {
          save_dataset(d, part_path(i, "csv"));
          write_atomic(part_path(i, "done"), fingerprint);
        }
        std::lock_guard<std::mutex> lock(mu);
        parts[i] = std::move(d);
        ++finished;
        if (options.progress) options.progress(finished, points.size(), points[i], false);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const int n_threads = std::max(1, options.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  Dataset out;
  for (Dataset& d : parts) {
    for (Sample& s : d) out.push_back(std::move(s));
  }
  return out;
}

Split split_dataset(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test_fraction must lie in (0, 1)");
  std::map<std::pair<double, double>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < data.size(); ++i) {
    strata[{data[i].provenance.xi_grid, data[i].provenance.L}].push_back(i);
  }
  std::vector<bool> is_test(data.size(), false);
  for (auto& [key, members] : strata) {
    const double n = static_cast<double>(members.size());
    if (n * test_fraction < 1.0) {
      std::clog << "warning: stratum xi=" << key.first << " L=" << key.second << " has only " << members.size()
                << " samples; keeping one for the test set\n";
    }
    const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * test_fraction)));
    std::mt19937_64 rng(splitmix(seed ^ splitmix(std::bit_cast<std::uint64_t>(key.first)) ^
                                 std::bit_cast<std::uint64_t>(key.second)));
    for (std::size_t k = members.size(); k > 1; --k) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
      std::swap(members[k - 1], members[j]);
    }
    for (std::size_t k = 0; k < n_test && k < members.size(); ++k) is_test[members[k]] = true;
  }
  Split out;
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? out.test : out.train).push_back(data[i]);
  return out;
}

std::vector<std::string> csv_header() {
  std::vector<std::string> h;
  for (int j = 0; j < channel::kFeatureCount; ++j) {
    char name[8];
    std::snprintf(name, sizeof name, "f%02d", j);
    h.emplace_back(name);
  }
  for (const char* c : {"key_rate", "xi_grid", "L", "xi", "mu", "status", "nc"}) h.emplace_back(c);
  return h;
}

void save_dataset(const Dataset& data, std::ostream& out) {
  const std::vector<std::string> header = csv_header();
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const Sample& s : data) {
    for (int j = 0; j < channel::kFeatureCount; ++j) out << fmt17(s.features[j]) << ',';
    const Provenance& p = s.provenance;
    out << fmt17(s.label) << ',' << fmt17(p.xi_grid) << ',' << fmt17(p.L) << ',' << fmt17(p.xi) << ','
        << fmt17(p.mu) << ',' << p.status << ',' << p.nc << '\n';
  }
}

Dataset load_dataset(std::istream& in) {
  Dataset out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const std::vector<std::string> expected = csv_header();
  if (split_csv(strip_cr(line)) != expected) throw ParseError("unexpected dataset header", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != expected.size()) {
      throw ParseError("expected " + std::to_string(expected.size()) + " columns, got " + std::to_string(cells.size()),
                       line_no);
    }
    Sample s;
    for (int j = 0; j < channel::kFeatureCount; ++j) {
      s.features.values[static_cast<std::size_t>(j)] = parse_number(cells[static_cast<std::size_t>(j)], line_no, expected[static_cast<std::size_t>(j)]);
    }
    std::size_t k = channel::kFeatureCount;
    s.label = parse_number(cells[k++], line_no, "key_rate");
    s.provenance.xi_grid = parse_number(cells[k++], line_no, "xi_grid");
    s.provenance.L = parse_number(cells[k++], line_no, "L");
    s.provenance.xi = parse_number(cells[k++], line_no, "xi");
    s.provenance.mu = parse_number(cells[k++], line_no, "mu");
    s.provenance.status = cells[k++];
    const double nc = parse_number(cells[k], line_no, "nc");
    if (nc != std::floor(nc)) throw ParseError("nc is not an integer", line_no);
    s.provenance.nc = static_cast<int>(nc);
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ostringstream os;
  save_dataset(data, os);
  write_atomic(path, os.str());
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path);
  return load_dataset(in);
}

std::vector<channel::FeatureVector> load_features(std::istream& in) {
  std::vector<channel::FeatureVector> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const std::vector<std::string> header = split_csv(strip_cr(line));
  const std::vector<std::string> names = csv_header();
  if (header.size() < static_cast<std::size_t>(channel::kFeatureCount) ||
      !std::equal(names.begin(), names.begin() + channel::kFeatureCount, header.begin())) {
    throw ParseError("header must start with f00..f28", 1);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() < static_cast<std::size_t>(channel::kFeatureCount)) {
      throw ParseError("row has " + std::to_string(cells.size()) + " values, expected at least 29 features", line_no);
    }
    channel::FeatureVector f;
    for (int j = 0; j < channel::kFeatureCount; ++j) {
      f.values[static_cast<std::size_t>(j)] = parse_number(cells[static_cast<std::size_t>(j)], line_no, names[static_cast<std::size_t>(j)]);
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace qkdnn::datagen
