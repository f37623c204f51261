#include "surgskill/ingest.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "surgskill/error.hpp"

namespace surgskill {

const char* to_string(Hand h) { return h == Hand::Left ? "L" : "R"; }

const char* to_string(Group g) {
  switch (g) {
    case Group::Expert: return "Expert";
    case Group::Intermediate: return "Intermediate";
    case Group::Novice: return "Novice";
    case Group::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Group> parse_group(const std::string& s) {
  if (s == "Expert") return Group::Expert;
  if (s == "Intermediate") return Group::Intermediate;
  if (s == "Novice") return Group::Novice;
  if (s == "Unknown") return Group::Unknown;
  return std::nullopt;
}

const AuxChannel* Trajectory::channel(const std::string& name) const {
  for (const auto& c : aux)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

[[noreturn]] void malformed(const std::string& name, std::size_t line, const std::string& why) {
  throw AnalysisError(ErrorKind::MalformedRow, name + ":" + std::to_string(line) + ": " + why);
}

void parse_metadata(const std::string& line, Trajectory& traj) {
  std::istringstream ss(line.substr(1));
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "id") {
      traj.id = val;
    } else if (key == "hand") {
      if (val == "L") traj.hand = Hand::Left;
      else if (val == "R") traj.hand = Hand::Right;
    } else if (key == "group") {
      if (auto g = parse_group(val)) traj.group = *g;
    }
  }
}

double infer_dt(const std::vector<double>& t) {
  if (t.size() < 2) return 1.0 / 30.0;
  std::vector<double> d(t.size() - 1);
  for (std::size_t k = 1; k < t.size(); ++k) d[k - 1] = t[k] - t[k - 1];
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    double lo = *std::max_element(d.begin(), mid);
    med = 0.5 * (lo + med);
  }
  double rate = 1.0 / med;
  double r = std::round(rate);
  if (r >= 1.0 && std::abs(rate - r) < 1e-6) return 1.0 / r;
  return med;
}

}  // namespace

Trajectory parse_trajectory(std::istream& in, const std::string& name, const LoadOptions& opts) {
  static const std::vector<std::string> optional_cols = {"z", "grasp_angle", "grasp_force"};
  Trajectory traj;
  std::vector<std::string> header;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      parse_metadata(s, traj);
      continue;
    }
    if (header.empty()) {
      header = split(s, ',');
      if (header.size() < 3 || header[0] != "t" || header[1] != "x" || header[2] != "y")
        malformed(name, lineno, "header must start with t,x,y");
      std::size_t next = 0;
      for (std::size_t c = 3; c < header.size(); ++c) {
        auto it = std::find(optional_cols.begin() + static_cast<std::ptrdiff_t>(next),
                            optional_cols.end(), header[c]);
        if (it == optional_cols.end()) malformed(name, lineno, "unexpected column '" + header[c] + "'");
        next = static_cast<std::size_t>(it - optional_cols.begin()) + 1;
        traj.aux.push_back({header[c], {}});
      }
      continue;
    }
    auto cols = split(s, ',');
    if (cols.size() != header.size())
      malformed(name, lineno, "expected " + std::to_string(header.size()) + " columns, got " +
                                  std::to_string(cols.size()));
    double vals[6];
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (!parse_number(cols[c], vals[c])) malformed(name, lineno, "cannot parse '" + cols[c] + "'");
    if (!traj.t.empty() && !(vals[0] > traj.t.back()))
      throw AnalysisError(ErrorKind::NonMonotonicTime,
                          name + ":" + std::to_string(lineno) + ": timestamps must increase");
    traj.t.push_back(vals[0]);
    traj.x.push_back(vals[1]);
    traj.y.push_back(vals[2]);
    for (std::size_t c = 3; c < cols.size(); ++c) traj.aux[c - 3].values.push_back(vals[c]);
  }
  if (header.empty()) malformed(name, lineno, "missing header");
  if (traj.size() < opts.min_samples)
    throw AnalysisError(ErrorKind::TooShort, name + ": " + std::to_string(traj.size()) +
                                                 " samples, need " + std::to_string(opts.min_samples));
  traj.dt = infer_dt(traj.t);
  if (traj.id.empty()) traj.id = name;
  return traj;
}

Trajectory load_trajectory(const std::string& path, Format, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw AnalysisError(ErrorKind::Io, "cannot open " + path);
  return parse_trajectory(in, path, opts);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "# id=" << traj.id << " hand=" << to_string(traj.hand) << " group=" << to_string(traj.group)
      << "\n";
  out << "t,x,y";
  for (const auto& c : traj.aux) out << ',' << c.name;
  out << '\n';
  std::string row;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    row.clear();
    row += format_double(traj.t[k]);
    row += ',';
    row += format_double(traj.x[k]);
    row += ',';
    row += format_double(traj.y[k]);
    for (const auto& c : traj.aux) {
      row += ',';
      row += format_double(c.values[k]);
    }
    row += '\n';
    out << row;
  }
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AnalysisError(ErrorKind::Io, "cannot write " + path);
  write_trajectory(out, traj);
  if (!out) throw AnalysisError(ErrorKind::Io, "write failed for " + path);
}

Trajectory resample_uniform(const Trajectory& traj, double rate) {
  if (!(rate > 0)) throw AnalysisError(ErrorKind::BadWindow, "resample rate must be positive");
  if (traj.size() < 2) throw AnalysisError(ErrorKind::TooShort, "resampling needs 2 samples");
  const double t0 = traj.t.front(), span = traj.t.back() - t0;
  const auto n = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;

  Trajectory out;
  out.dt = 1.0 / rate;
  out.hand = traj.hand;
  out.id = traj.id;
  out.group = traj.group;
  out.t.resize(n);
  out.x.resize(n);
  out.y.resize(n);
  for (const auto& c : traj.aux) out.aux.push_back({c.name, std::vector<double>(n)});

  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double tk = t0 + static_cast<double>(k) / rate;
    while (j + 2 < traj.size() && traj.t[j + 1] <= tk) ++j;
    double t1 = traj.t[j], t2 = traj.t[j + 1];
    double w = std::clamp((tk - t1) / (t2 - t1), 0.0, 1.0);
    auto lerp = [&](const std::vector<double>& v) { return w == 0.0 ? v[j] : v[j] + w * (v[j + 1] - v[j]); };
    out.t[k] = tk;
    out.x[k] = lerp(traj.x);
    out.y[k] = lerp(traj.y);
    for (std::size_t c = 0; c < traj.aux.size(); ++c) out.aux[c].values[k] = lerp(traj.aux[c].values);
  }
  return out;
}

std::vector<double> savgol_weights(int window, int order, int deriv, int offset) {
  if (window < 3 || window % 2 == 0 || order >= window || order < deriv)
    throw AnalysisError(ErrorKind::BadWindow, "invalid Savitzky-Golay window/order");
  const int m = window / 2;
  Eigen::MatrixXd A(window, order + 1);
  for (int i = 0; i < window; ++i)
    for (int j = 0; j <= order; ++j) A(i, j) = std::pow(static_cast<double>(i - m), j);
  Eigen::MatrixXd pinv = A.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));

  std::vector<double> w(static_cast<std::size_t>(window), 0.0);
  for (int j = deriv; j <= order; ++j) {
    double fact = 1.0;
    for (int q = 0; q < deriv; ++q) fact *= j - q;
    double coef = fact * std::pow(static_cast<double>(offset), j - deriv);
    if (coef == 0.0) continue;
    for (int i = 0; i < window; ++i) w[static_cast<std::size_t>(i)] += coef * pinv(j, i);
  }
  return w;
}

std::vector<double> compute_curvature(const std::vector<double>& vx, const std::vector<double>& vy,
                                      const std::vector<double>& ax, const std::vector<double>& ay,
                                      double v_floor) {
  std::vector<double> kappa(vx.size(), 0.0);
  for (std::size_t k = 0; k < vx.size(); ++k) {
    double v2 = vx[k] * vx[k] + vy[k] * vy[k];
    double v = std::sqrt(v2);
    if (v > v_floor) kappa[k] = std::abs(vx[k] * ay[k] - vy[k] * ax[k]) / (v2 * v);
  }
  return kappa;
}

namespace {

void fill_derived(KinematicProfile& p, double v_floor) {
  const std::size_t n = p.size();
  p.v.resize(n);
  p.a_t.assign(n, 0.0);
  p.a_n.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    p.v[k] = std::hypot(p.vx[k], p.vy[k]);
    if (p.v[k] > v_floor) {
      p.a_t[k] = (p.vx[k] * p.ax[k] + p.vy[k] * p.ay[k]) / p.v[k];
      p.a_n[k] = std::abs(p.vx[k] * p.ay[k] - p.vy[k] * p.ax[k]) / p.v[k];
    }
  }
  p.kappa = compute_curvature(p.vx, p.vy, p.ax, p.ay, v_floor);
}

}  // namespace

KinematicProfile differentiate(const Trajectory& traj, const DiffOptions& opts) {
  const int w = opts.window;
  if (w < 3 || w % 2 == 0 || opts.order >= w || opts.order < 2)
    throw AnalysisError(ErrorKind::BadWindow, "window must be odd and order in [2, window)");
  const std::size_t n = traj.size();
  if (n < static_cast<std::size_t>(2 * w + 1))
    throw AnalysisError(ErrorKind::TooShort, traj.id + ": " + std::to_string(n) + " samples, need " +
                                                 std::to_string(2 * w + 1));
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs((traj.t[k] - traj.t[k - 1]) - traj.dt) >= 0.1 * traj.dt)
      throw AnalysisError(ErrorKind::NonUniformSampling,
                          traj.id + ": sample " + std::to_string(k) + " deviates from dt; resample first");

  const int m = w / 2;
  const double dt = traj.dt;
  KinematicProfile p;
  p.source = traj.id;
  p.dt = dt;
  p.margin = static_cast<std::size_t>(m);
  p.t = traj.t;
  p.x = traj.x;
  p.y = traj.y;
  p.vx.resize(n);
  p.vy.resize(n);
  p.ax.resize(n);
  p.ay.resize(n);

  auto apply = [&](const std::vector<double>& wt, std::size_t start, double scale,
                   const std::vector<double>& src) {
    double s = 0.0;
    for (int i = 0; i < w; ++i) s += wt[static_cast<std::size_t>(i)] * src[start + static_cast<std::size_t>(i)];
    return s * scale;
  };

  const auto w1 = savgol_weights(w, opts.order, 1);
  const auto w2 = savgol_weights(w, opts.order, 2);
  const double s1 = 1.0 / dt, s2 = 1.0 / (dt * dt);
  for (std::size_t k = static_cast<std::size_t>(m); k + static_cast<std::size_t>(m) < n; ++k) {
    std::size_t start = k - static_cast<std::size_t>(m);
    p.vx[k] = apply(w1, start, s1, traj.x);
    p.vy[k] = apply(w1, start, s1, traj.y);
    p.ax[k] = apply(w2, start, s2, traj.x);
    p.ay[k] = apply(w2, start, s2, traj.y);
  }
  for (int e = 1; e <= m; ++e) {
    const auto h1 = savgol_weights(w, opts.order, 1, e);
    const auto h2 = savgol_weights(w, opts.order, 2, e);
    const auto l1 = savgol_weights(w, opts.order, 1, -e);
    const auto l2 = savgol_weights(w, opts.order, 2, -e);
    std::size_t lo = static_cast<std::size_t>(m - e);
    std::size_t hi = n - 1 - static_cast<std::size_t>(m) + static_cast<std::size_t>(e);
    std::size_t tail = n - static_cast<std::size_t>(w);
    p.vx[lo] = apply(l1, 0, s1, traj.x);
    p.vy[lo] = apply(l1, 0, s1, traj.y);
    p.ax[lo] = apply(l2, 0, s2, traj.x);
    p.ay[lo] = apply(l2, 0, s2, traj.y);
    p.vx[hi] = apply(h1, tail, s1, traj.x);
    p.vy[hi] = apply(h1, tail, s1, traj.y);
    p.ax[hi] = apply(h2, tail, s2, traj.x);
    p.ay[hi] = apply(h2, tail, s2, traj.y);
  }
  fill_derived(p, opts.v_floor);
  return p;
}

KinematicProfile profile_from_states(const Trajectory& traj, const std::vector<double>& vx,
                                     const std::vector<double>& vy, double v_floor) {
  const std::size_t n = traj.size();
  if (vx.size() != n || vy.size() != n)
    throw AnalysisError(ErrorKind::MalformedRow, "state arrays do not match trajectory length");
  if (n < 2) throw AnalysisError(ErrorKind::TooShort, "need 2 samples");
  KinematicProfile p;
  p.source = traj.id;
  p.dt = traj.dt;
  p.t = traj.t;
  p.x = traj.x;
  p.y = traj.y;
  p.vx = vx;
  p.vy = vy;
  p.ax.resize(n);
  p.ay.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t a = k + 1 < n ? k : k - 1;
    p.ax[k] = (vx[a + 1] - vx[a]) / traj.dt;
    p.ay[k] = (vy[a + 1] - vy[a]) / traj.dt;
  }
  fill_derived(p, v_floor);
  return p;
}

}  // namespace surgskill
