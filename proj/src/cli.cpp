#include "surgskill/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "surgskill/error.hpp"
#include "surgskill/planning.hpp"

namespace surgskill::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw AnalysisError(ErrorKind::BadConfig, "invalid value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

const std::vector<std::string> kSkillFields = {"kp",     "kd",        "sigma",    "v_start",  "v_transport",
                                               "v_intercept", "jitter", "overshoot", "retry", "speed_cv",
                                               "slowdown"};

struct Entry {
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

Entry dbl(const std::string& key, double Config::*outer) {
  return {key, [key, outer](Config& c, const std::string& v) { c.*outer = to_double(key, v); },
          [outer](const Config& c) { return format_double(c.*outer); }};
}

template <class S, class F>
Entry member(const std::string& key, S Config::*outer, F S::*inner) {
  return {key,
          [key, outer, inner](Config& c, const std::string& v) {
            if constexpr (std::is_same_v<F, double>) (c.*outer).*inner = to_double(key, v);
            else if constexpr (std::is_same_v<F, bool>) (c.*outer).*inner = to_bool(key, v);
            else (c.*outer).*inner = static_cast<F>(to_int(key, v));
          },
          [outer, inner](const Config& c) {
            if constexpr (std::is_same_v<F, double>) return format_double((c.*outer).*inner);
            else if constexpr (std::is_same_v<F, bool>) return std::string((c.*outer).*inner ? "true" : "false");
            else return std::to_string((c.*outer).*inner);
          }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = [] {
    std::vector<Entry> v = {
        member("sg.window", &Config::diff, &DiffOptions::window),
        member("sg.order", &Config::diff, &DiffOptions::order),
        member("v_floor", &Config::diff, &DiffOptions::v_floor),
        dbl("resample.rate", &Config::resample_rate),
        member("bins.speed", &Config::binning, &Binning::speed_bins),
        member("bins.kappa", &Config::binning, &Binning::kappa_bins),
        member("bins.v_max", &Config::binning, &Binning::v_max),
        member("bins.kappa_min", &Config::binning, &Binning::kappa_min),
        member("bins.kappa_max", &Config::binning, &Binning::kappa_max),
        member("bins.alpha", &Config::binning, &Binning::alpha),
        dbl("dominant.mass", &Config::dominant_mass),
        member("prim.v_min", &Config::primitives, &PrimitiveLibrary::v_min),
        member("prim.kappa_thresh", &Config::primitives, &PrimitiveLibrary::kappa_thresh),
        member("prim.a_thresh", &Config::primitives, &PrimitiveLibrary::a_thresh),
        member("prim.min_duration", &Config::primitives, &PrimitiveLibrary::min_duration),
        {"pwarx.k", [](Config& c, const std::string& v) { c.k_modes = static_cast<int>(to_int("pwarx.k", v)); },
         [](const Config& c) { return std::to_string(c.k_modes); }},
        member("pwarx.neighbors", &Config::ident, &IdentOptions::neighbors),
        member("pwarx.restarts", &Config::ident, &IdentOptions::restarts),
        member("pwarx.max_iter", &Config::ident, &IdentOptions::max_iter),
        member("pwarx.refine_starts", &Config::ident, &IdentOptions::refine_starts),
        member("pwarx.residual_filter", &Config::ident, &IdentOptions::residual_filter),
        {"pwarx.pooled", [](Config& c, const std::string& v) { c.pooled = to_bool("pwarx.pooled", v); },
         [](const Config& c) { return std::string(c.pooled ? "true" : "false"); }},
        {"seed",
         [](Config& c, const std::string& v) {
           long long s = to_int("seed", v);
           if (s < 0) bad_value("seed", v);
           c.seed = static_cast<std::uint64_t>(s);
         },
         [](const Config& c) { return std::to_string(c.seed); }},
        {"synth.skill",
         [](Config& c, const std::string& v) {
           if (v != "expert" && v != "intermediate" && v != "novice") bad_value("synth.skill", v);
           c.synth_skill = v;
         },
         [](const Config& c) { return c.synth_skill; }},
        {"synth.blocks", [](Config& c, const std::string& v) { c.synth_blocks = static_cast<int>(to_int("synth.blocks", v)); },
         [](const Config& c) { return std::to_string(c.synth_blocks); }},
        dbl("pwa.noise", &Config::pwa_noise),
        {"pwa.horizon",
         [](Config& c, const std::string& v) { c.pwa_horizon = static_cast<std::size_t>(to_int("pwa.horizon", v)); },
         [](const Config& c) { return std::to_string(c.pwa_horizon); }},
    };
    for (const auto& f : kSkillFields) {
      std::string key = "synth." + f;
      v.push_back({key, [key, f](Config& c, const std::string& val) { c.skill_overrides[f] = to_double(key, val); },
                   [f](const Config& c) {
                     auto it = c.skill_overrides.find(f);
                     return it == c.skill_overrides.end() ? std::string("preset") : format_double(it->second);
                   }});
    }
    return v;
  }();
  return e;
}

}  // namespace

void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : entries())
    if (e.key == key) {
      if (key.rfind("synth.", 0) == 0 && value == "preset") {
        cfg.skill_overrides.erase(key.substr(6));
        return;
      }
      e.set(cfg, value);
      return;
    }
  throw AnalysisError(ErrorKind::BadConfig, "unknown key '" + key + "'");
}

Config parse_config(std::istream& in, const std::string& name) {
  Config cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw AnalysisError(ErrorKind::BadConfig, name + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const AnalysisError& e) {
      throw AnalysisError(ErrorKind::BadConfig, name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AnalysisError(ErrorKind::Io, "cannot open config " + path);
  return parse_config(in, path);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& e : entries()) out.push_back(e.key);
  return out;
}

std::string config_text(const Config& cfg) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

SkillParams skill_params(const Config& cfg) {
  SkillParams p = cfg.synth_skill == "novice"         ? SkillParams::novice()
                  : cfg.synth_skill == "intermediate" ? SkillParams::intermediate()
                                                      : SkillParams::expert();
  double* fields[] = {&p.kp,     &p.kd,     &p.sigma,     &p.v_start, &p.v_transport, &p.v_intercept,
                      &p.jitter, &p.overshoot, &p.retry, &p.speed_cv, &p.slowdown};
  for (std::size_t i = 0; i < kSkillFields.size(); ++i) {
    auto it = cfg.skill_overrides.find(kSkillFields[i]);
    if (it != cfg.skill_overrides.end()) *fields[i] = it->second;
  }
  return p;
}

namespace {

json config_json(const Config& cfg) {
  json j = json::object();
  for (const auto& e : entries()) j[e.key] = e.get(cfg);
  return j;
}

template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const auto nthreads = static_cast<std::size_t>(std::max(1, jobs));
  if (nthreads == 1 || n < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(nthreads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

struct Prepared {
  Trajectory traj;
  KinematicProfile profile;
};

Prepared prepare(const std::string& path, const Config& cfg) {
  try {
    LoadOptions lo;
    lo.min_samples = static_cast<std::size_t>(2 * cfg.diff.window + 1);
    Prepared p{load_trajectory(path, Format::Csv, lo), {}};
    if (cfg.resample_rate > 0) {
      p.traj = resample_uniform(p.traj, cfg.resample_rate);
    } else {
      for (std::size_t k = 1; k < p.traj.size(); ++k)
        if (std::abs(p.traj.t[k] - p.traj.t[k - 1] - p.traj.dt) >= 0.1 * p.traj.dt) {
          p.traj = resample_uniform(p.traj, std::max(1.0, std::round(1.0 / p.traj.dt)));
          break;
        }
    }
    p.profile = differentiate(p.traj, cfg.diff);
    return p;
  } catch (const AnalysisError& e) {
    std::string msg = e.what();
    if (msg.find(path) == std::string::npos) msg = path + ": " + msg;
    throw AnalysisError(e.kind(), msg);
  }
}

json rle(const std::vector<int>& a) {
  json out = json::array();
  for (std::size_t i = 0; i < a.size();) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    out.push_back({a[i], j - i});
    i = j;
  }
  return out;
}

json modes_json(const ModeSet& ms) {
  json j;
  j["k"] = ms.k();
  j["modes"] = json::array();
  for (const auto& m : ms.modes)
    j["modes"].push_back({{"index", m.index}, {"a31", m.a31}, {"a33", m.a33}, {"b3", m.b3},
                          {"a42", m.a42}, {"a44", m.a44}, {"b4", m.b4}, {"dt", m.dt}});
  j["assignments_rle"] = rle(ms.assignments);
  j["objective"] = ms.objective;
  j["objective_history"] = ms.objective_history;
  j["iterations"] = ms.iterations;
  j["converged"] = ms.converged;
  j["local_fits"] = ms.local_fits;
  j["kept_local_fits"] = ms.kept_fits;
  j["refined_starts"] = ms.refine_starts;
  j["seed"] = ms.options.seed;
  j["options"] = {{"neighbors", ms.options.neighbors},
                  {"restarts", ms.options.restarts},
                  {"max_iter", ms.options.max_iter},
                  {"refine_starts", ms.options.refine_starts},
                  {"residual_filter", ms.options.residual_filter}};
  j["warnings"] = ms.warnings;
  return j;
}

json summaries_json(const std::vector<ModeSummary>& ss) {
  json out = json::array();
  for (const auto& s : ss) {
    json e;
    e["mode"] = s.mode;
    e["occupancy"] = s.occupancy;
    e["count"] = s.count;
    e["mean"] = {{"v", s.mean[0]}, {"a_t", s.mean[1]}, {"a_n", s.mean[2]}};
    json cov = json::array(), axes = json::array();
    for (int r = 0; r < 3; ++r) {
      cov.push_back({s.cov(r, 0), s.cov(r, 1), s.cov(r, 2)});
      axes.push_back({s.axes(0, r), s.axes(1, r), s.axes(2, r)});
    }
    e["covariance"] = cov;
    e["ellipsoid_axes"] = axes;
    e["fixed_point"] = {{"x", s.has_fixed_point_x ? json(s.fixed_point_x) : json(nullptr)},
                        {"y", s.has_fixed_point_y ? json(s.fixed_point_y) : json(nullptr)}};
    out.push_back(e);
  }
  return out;
}

json phases_json(const std::vector<ModeSummary>& ss) {
  try {
    json j = json::object();
    for (const auto& [m, ph] : phase_correspondence(ss)) j[std::to_string(m)] = to_string(ph);
    return j;
  } catch (const AnalysisError& e) {
    return {{"unavailable", e.what()}};
  }
}

json histogram_json(const SpeedCurvatureHistogram& h, double mass) {
  json j;
  j["v_max"] = h.speed_edges.back();
  j["n_samples"] = h.n_samples;
  j["shape"] = {h.p.rows(), h.p.cols()};
  auto dom = dominant_states(h, mass);
  j["dominant_mass"] = mass;
  j["dominant_count"] = dom.size();
  json d = json::array();
  for (auto [i, k] : dom) d.push_back({i, k});
  j["dominant_states"] = d;
  return j;
}

std::string hist_csv(const SpeedCurvatureHistogram& h) {
  std::string out = "speed_lo,speed_hi,kappa_lo,kappa_hi,p\n";
  for (Eigen::Index i = 0; i < h.p.rows(); ++i)
    for (Eigen::Index j = 0; j < h.p.cols(); ++j)
      out += format_double(h.speed_edges[static_cast<std::size_t>(i)]) + "," +
             format_double(h.speed_edges[static_cast<std::size_t>(i) + 1]) + "," +
             format_double(h.kappa_edges[static_cast<std::size_t>(j)]) + "," +
             format_double(h.kappa_edges[static_cast<std::size_t>(j) + 1]) + "," + format_double(h.p(i, j)) + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AnalysisError(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw AnalysisError(ErrorKind::Io, "write failed for " + path);
}

std::string finish(const json& report, const std::string& out) {
  std::string text = report.dump(2) + "\n";
  if (!out.empty() && out != "-") write_text(out, text);
  return text;
}

}  // namespace

std::string cmd_analyze(const std::vector<std::string>& inputs, const Config& cfg, const std::string& out,
                        const RunOptions& run) {
  if (inputs.empty()) throw std::invalid_argument("no input files");
  cfg.primitives.validate(1.0 / 30.0);
  if (!run.plots_dir.empty()) fs::create_directories(run.plots_dir);

  std::vector<Prepared> prep(inputs.size());
  std::vector<json> entries_out(inputs.size());
  IdentOptions io = cfg.ident;
  io.seed = cfg.seed;

  parallel_for(inputs.size(), run.jobs, [&](std::size_t i) {
    prep[i] = prepare(inputs[i], cfg);
    const auto& tr = prep[i].traj;
    const auto& pr = prep[i].profile;
    json e;
    e["path"] = inputs[i];
    e["id"] = tr.id;
    e["hand"] = to_string(tr.hand);
    e["group"] = to_string(tr.group);
    e["n_samples"] = tr.size();
    e["dt"] = tr.dt;
    e["interior_samples"] = pr.interior();

    auto labels = classify_samples(pr, cfg.primitives);
    auto seg = segment(labels, pr.dt, cfg.primitives.min_duration);
    auto met = primitive_metrics(seg);
    json pm = json::object();
    for (std::size_t l = 0; l < kPrimitiveCount; ++l)
      pm[to_string(static_cast<Primitive>(l))] = {{"frequency", met[l].frequency},
                                                   {"time_fraction", met[l].time_fraction},
                                                   {"mean_duration", met[l].mean_duration}};
    e["primitives"] = pm;
    e["segment_count"] = seg.segments.size();

    auto hist = build_histogram(std::vector<const KinematicProfile*>{&pr}, cfg.binning);
    e["histogram"] = histogram_json(hist, cfg.dominant_mass);

    std::vector<int> assignment;
    try {
      auto ms = identify_pwarx(pr, cfg.k_modes, io);
      auto sums = mode_kinematic_summary(ms, pr);
      e["pwarx"] = modes_json(ms);
      e["mode_summaries"] = summaries_json(sums);
      e["phase_correspondence"] = phases_json(sums);
      assignment = ms.assignments;
    } catch (const AnalysisError& err) {
      e["pwarx"] = {{"unavailable", err.what()}};
    }

    if (!run.plots_dir.empty()) {
      std::string stem = (fs::path(run.plots_dir) / (std::to_string(i) + "_" + fs::path(inputs[i]).stem().string())).string();
      write_text(stem + ".hist.csv", hist_csv(hist));
      write_text(stem + ".segments.csv", segments_csv(seg, pr));
      std::string modes = "t,mode\n";
      for (std::size_t k = 0; k < assignment.size(); ++k)
        modes += format_double(pr.t[pr.begin() + k]) + "," + std::to_string(assignment[k]) + "\n";
      write_text(stem + ".modes.csv", modes);
    }
    entries_out[i] = std::move(e);
  });

  json report;
  report["schema_version"] = kSchemaVersion;
  report["kind"] = "analyze";
  report["units"] = {{"divergence", "nats"}, {"speed", "mm/s"}, {"std", "population"}};
  report["config"] = config_json(cfg);
  report["trajectories"] = entries_out;
  if (cfg.pooled && inputs.size() > 1) {
    std::vector<const KinematicProfile*> ps;
    for (const auto& p : prep) ps.push_back(&p.profile);
    try {
      auto ms = identify_pwarx_pooled(ps, cfg.k_modes, io);
      auto sums = mode_kinematic_summary(ms, ps);
      report["pooled"] = {{"pwarx", modes_json(ms)},
                          {"mode_summaries", summaries_json(sums)},
                          {"phase_correspondence", phases_json(sums)}};
    } catch (const AnalysisError& err) {
      report["pooled"] = {{"unavailable", err.what()}};
    }
  }
  return finish(report, out);
}

namespace {

struct ManifestRow {
  std::string path, subject;
  Group group;
};

std::vector<ManifestRow> read_manifest(const std::string& manifest) {
  std::ifstream in(manifest);
  if (!in) throw AnalysisError(ErrorKind::Io, "cannot open manifest " + manifest);
  const fs::path base = fs::path(manifest).parent_path();
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(trim(tok));
    if (f.size() != 3)
      throw AnalysisError(ErrorKind::MalformedRow, manifest + ":" + std::to_string(lineno) + ": expected path,subject,group");
    if (rows.empty() && f[0] == "path" && f[1] == "subject") continue;
    auto g = parse_group(f[2]);
    if (!g) throw AnalysisError(ErrorKind::MalformedRow, manifest + ":" + std::to_string(lineno) + ": unknown group '" + f[2] + "'");
    fs::path p(f[0]);
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) throw AnalysisError(ErrorKind::Io, "manifest references missing file " + p.string());
    rows.push_back({p.string(), f[1], *g});
  }
  if (rows.empty()) throw std::invalid_argument("manifest lists no files");
  return rows;
}

}  // namespace

std::string cmd_group(const std::string& manifest, const Config& cfg, const std::string& out, const RunOptions& run) {
  auto rows = read_manifest(manifest);
  std::vector<Prepared> prep(rows.size());
  parallel_for(rows.size(), run.jobs, [&](std::size_t i) { prep[i] = prepare(rows[i].path, cfg); });

  // groups in canonical order, subjects in manifest order
  GroupSet groups;
  std::vector<std::vector<std::string>> subject_names;
  for (Group g : {Group::Expert, Group::Intermediate, Group::Novice, Group::Unknown}) {
    GroupSubjects gs;
    gs.label = g;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].group != g) continue;
      auto it = std::find(names.begin(), names.end(), rows[i].subject);
      if (it == names.end()) {
        names.push_back(rows[i].subject);
        gs.subjects.emplace_back();
        it = names.end() - 1;
      }
      gs.subjects[static_cast<std::size_t>(it - names.begin())].push_back(prep[i].profile);
    }
    if (!gs.subjects.empty()) {
      groups.push_back(std::move(gs));
      subject_names.push_back(std::move(names));
    }
  }

  Binning bins = cfg.binning;
  if (!(bins.v_max > 0)) bins.v_max = std::max(max_interior_speed(groups), 1e-12);

  json report;
  report["schema_version"] = kSchemaVersion;
  report["kind"] = "group";
  report["units"] = {{"divergence", "nats"}, {"speed", "mm/s"}, {"std", "population"}};
  report["config"] = config_json(cfg);
  report["global_v_max"] = bins.v_max;

  GroupSet eligible;
  json unavailable = json::array();
  for (const auto& g : groups) {
    if (g.subjects.size() >= 2) eligible.push_back(g);
    else unavailable.push_back(to_string(g.label));
  }

  json gj = json::array();
  IdentOptions io = cfg.ident;
  io.seed = cfg.seed;
  std::vector<json> planning(groups.size());
  parallel_for(groups.size(), run.jobs, [&](std::size_t gi) {
    const auto& g = groups[gi];
    std::vector<const KinematicProfile*> ps;
    std::vector<std::size_t> subject_of;
    for (std::size_t s = 0; s < g.subjects.size(); ++s)
      for (const auto& p : g.subjects[s]) {
        ps.push_back(&p);
        subject_of.push_back(s);
      }
    json pj;
    try {
      auto ms = identify_pwarx_pooled(ps, cfg.k_modes, io);
      auto sums = mode_kinematic_summary(ms, ps);
      pj["pwarx"] = modes_json(ms);
      pj["mode_summaries"] = summaries_json(sums);
      pj["phase_correspondence"] = phases_json(sums);

      std::vector<SubjectPoints> subj(g.subjects.size());
      std::vector<std::vector<Eigen::Vector2d>> pts(g.subjects.size());
      for (std::size_t src = 0; src < ps.size(); ++src) {
        const auto& p = *ps[src];
        auto& sp = subj[subject_of[src]];
        for (std::size_t j = ms.offsets[src]; j < ms.offsets[src + 1]; ++j) {
          std::size_t k = p.begin() + (j - ms.offsets[src]);
          pts[subject_of[src]].emplace_back(p.x[k], p.y[k]);
          sp.tags.push_back(ms.assignments[j]);
        }
      }
      Points2 all(static_cast<Eigen::Index>(ms.assignments.size()), 2);
      std::vector<int> tags;
      Eigen::Index row = 0;
      for (std::size_t s = 0; s < subj.size(); ++s) {
        subj[s].points.resize(static_cast<Eigen::Index>(pts[s].size()), 2);
        for (std::size_t k = 0; k < pts[s].size(); ++k) {
          subj[s].points.row(static_cast<Eigen::Index>(k)) = pts[s][k].transpose();
          all.row(row++) = pts[s][k].transpose();
        }
        tags.insert(tags.end(), subj[s].tags.begin(), subj[s].tags.end());
      }
      try {
        auto sc = spatial_organization(all, tags);
        json per = json::array();
        for (const auto& e : sc.per_mode) per.push_back({{"mode", e.tag}, {"n", e.n}, {"errors", e.errors}});
        pj["spatial_organization"] = {{"ratio", sc.ratio}, {"n_points", sc.n_points}, {"per_mode", per}};
      } catch (const AnalysisError& err) {
        pj["spatial_organization"] = {{"unavailable", err.what()}};
      }
      try {
        auto loo = loo_spatial_organization(subj);
        pj["spatial_organization_loo"] = {{"mean", loo.mean}, {"std", loo.std}, {"ratios", loo.ratios}};
      } catch (const AnalysisError& err) {
        pj["spatial_organization_loo"] = {{"unavailable", err.what()}};
      }
    } catch (const AnalysisError& err) {
      pj["unavailable"] = err.what();
    }
    planning[gi] = std::move(pj);
  });

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    json e;
    e["group"] = to_string(g.label);
    e["subjects"] = subject_names[gi];
    std::vector<const KinematicProfile*> ps;
    for (const auto& s : g.subjects)
      for (const auto& p : s) ps.push_back(&p);
    e["n_files"] = ps.size();
    e["histogram"] = histogram_json(build_histogram(ps, bins), cfg.dominant_mass);
    e["planning"] = planning[gi];
    gj.push_back(e);
  }
  report["groups"] = gj;

  json dt;
  if (eligible.empty()) {
    dt["unavailable"] = "InsufficientSubjects: no group has 2 or more subjects";
  } else {
    auto t = loo_permutation_table(eligible, bins);
    json labels = json::array(), mean = json::array(), sd = json::array(), pairs = json::array();
    for (Eigen::Index m = 0; m < t.mean.rows(); ++m) {
      labels.push_back(to_string(t.groups[static_cast<std::size_t>(m)]));
      json rm = json::array(), rs = json::array(), rp = json::array();
      for (Eigen::Index n = 0; n < t.mean.cols(); ++n) {
        rm.push_back(t.mean(m, n));
        rs.push_back(t.std(m, n));
        rp.push_back(t.pairs(m, n));
      }
      mean.push_back(rm);
      sd.push_back(rs);
      pairs.push_back(rp);
    }
    dt = {{"groups", labels}, {"mean", mean}, {"std", sd}, {"pairs", pairs}};
  }
  dt["unavailable_groups"] = unavailable;
  report["divergence_table"] = dt;

  auto cm = loo_confusion(groups, bins);
  json cj;
  json labels = json::array(), counts = json::array();
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r) {
    labels.push_back(to_string(cm.labels[static_cast<std::size_t>(r)]));
    json row = json::array();
    for (Eigen::Index c = 0; c < cm.counts.cols(); ++c) row.push_back(cm.counts(r, c));
    counts.push_back(row);
  }
  cj["labels"] = labels;
  cj["counts"] = counts;
  cj["correct"] = cm.counts.trace();
  cj["evaluated"] = cm.counts.sum();
  cj["unavailable_groups"] = unavailable;
  report["confusion_matrix"] = cj;
  return finish(report, out);
}

std::vector<std::string> cmd_synth(SynthKind kind, const Config& cfg, std::uint64_t first_seed, std::size_t count,
                                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  if (kind == SynthKind::Peg) {
    const SkillParams sp = skill_params(cfg);
    sp.validate();
    const auto group = cfg.synth_skill == "novice"         ? Group::Novice
                       : cfg.synth_skill == "intermediate" ? Group::Intermediate
                                                           : Group::Expert;
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed = first_seed + i;
      auto run = generate_peg_transfer(sp, PegLayout::standard(), seed, cfg.synth_blocks);
      run.traj.group = group;
      run.traj.id = cfg.synth_skill + "-" + std::to_string(seed);
      std::string base = (fs::path(out_dir) / ("peg_" + std::to_string(seed))).string();
      save_trajectory(run.traj, base + ".csv");
      std::string side = "t,phase\n";
      for (std::size_t k = 0; k < run.phases.size(); ++k)
        side += format_double(run.traj.t[k]) + "," + to_string(run.phases[k]) + "\n";
      write_text(base + ".labels.csv", side);
      files.push_back(base + ".csv");
    }
  } else {
    PwaScenario sc = PwaScenario::three_band();
    sc.horizon = cfg.pwa_horizon;
    auto clean = generate_pwa_sequence(sc, 0);
    double vmax = 0.0;
    for (std::size_t k = 0; k < clean.vx.size(); ++k) vmax = std::max(vmax, std::hypot(clean.vx[k], clean.vy[k]));
    sc.sigma = cfg.pwa_noise * vmax;
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed = first_seed + i;
      auto run = generate_pwa_sequence(sc, seed);
      std::string base = (fs::path(out_dir) / ("pwa_" + std::to_string(seed))).string();
      save_trajectory(run.traj, base + ".csv");
      std::string side = "t,mode\n";
      for (std::size_t k = 0; k < run.labels.size(); ++k)
        side += format_double(run.traj.t[k]) + "," + std::to_string(run.labels[k]) + "\n";
      write_text(base + ".labels.csv", side);
      files.push_back(base + ".csv");
    }
  }
  return files;
}

void cmd_report(const std::string& report_path, std::ostream& out) {
  std::ifstream in(report_path);
  if (!in) throw AnalysisError(ErrorKind::Io, "cannot open report " + report_path);
  json r;
  try {
    r = json::parse(in);
  } catch (const json::exception& e) {
    throw AnalysisError(ErrorKind::MalformedRow, report_path + ": " + e.what());
  }
  out << std::fixed;
  const std::string kind = r.value("kind", "unknown");
  out << "report kind: " << kind << " (schema " << r.value("schema_version", 0) << ")\n";
  if (kind == "analyze") {
    for (const auto& t : r["trajectories"]) {
      out << "\n" << t["id"].get<std::string>() << "  samples=" << t["n_samples"].get<std::size_t>()
          << "  segments=" << t["segment_count"].get<std::size_t>() << "\n";
      for (const auto& [name, m] : t["primitives"].items())
        out << "  " << std::left << std::setw(16) << name << " n=" << std::setw(4) << m["frequency"].get<int>()
            << " frac=" << std::setprecision(3) << m["time_fraction"].get<double>()
            << " mean=" << m["mean_duration"].get<double>() << "s\n";
      const auto& pw = t["pwarx"];
      if (pw.contains("unavailable")) {
        out << "  modes: unavailable (" << pw["unavailable"].get<std::string>() << ")\n";
      } else {
        out << "  modes: K=" << pw["k"].get<int>() << " objective=" << std::setprecision(4)
            << pw["objective"].get<double>() << " iterations=" << pw["iterations"].get<int>() << "\n";
        for (const auto& s : t["mode_summaries"])
          out << "    mode " << s["mode"].get<int>() << " occ=" << std::setprecision(3) << s["occupancy"].get<double>()
              << " v=" << s["mean"]["v"].get<double>() << " a_t=" << s["mean"]["a_t"].get<double>()
              << " a_n=" << s["mean"]["a_n"].get<double>() << "\n";
        const auto& pc = t["phase_correspondence"];
        if (!pc.contains("unavailable"))
          for (const auto& [m, ph] : pc.items()) out << "    mode " << m << " -> " << ph.get<std::string>() << "\n";
      }
    }
  } else if (kind == "group") {
    const auto& dt = r["divergence_table"];
    if (dt.contains("mean")) {
      out << "\nsymmetric KL, leave-one-out mean (std) [nats]\n";
      const auto& g = dt["groups"];
      for (std::size_t m = 0; m < g.size(); ++m) {
        out << "  " << std::left << std::setw(13) << g[m].get<std::string>();
        for (std::size_t n = 0; n < g.size(); ++n)
          out << " " << std::setprecision(3) << dt["mean"][m][n].get<double>() << " (" << dt["std"][m][n].get<double>()
              << ")";
        out << "\n";
      }
    } else {
      out << "\ndivergence table unavailable\n";
    }
    const auto& cm = r["confusion_matrix"];
    out << "\nconfusion matrix (rows true, cols predicted): " << cm["correct"].get<int>() << "/"
        << cm["evaluated"].get<int>() << " correct\n";
    for (std::size_t i = 0; i < cm["labels"].size(); ++i) {
      out << "  " << std::left << std::setw(13) << cm["labels"][i].get<std::string>();
      for (const auto& c : cm["counts"][i]) out << " " << c.get<int>();
      out << "\n";
    }
    out << "\nspatial organization (misclassification ratio)\n";
    for (const auto& g : r["groups"]) {
      out << "  " << std::left << std::setw(13) << g["group"].get<std::string>();
      const auto& pl = g["planning"];
      if (pl.contains("spatial_organization") && pl["spatial_organization"].contains("ratio"))
        out << " complete=" << std::setprecision(3) << pl["spatial_organization"]["ratio"].get<double>();
      else
        out << " complete=unavailable";
      if (pl.contains("spatial_organization_loo") && pl["spatial_organization_loo"].contains("mean"))
        out << " loo=" << pl["spatial_organization_loo"]["mean"].get<double>() << " ("
            << pl["spatial_organization_loo"]["std"].get<double>() << ")";
      else
        out << " loo=unavailable";
      out << "\n";
    }
  }
}

}  // namespace surgskill::cli
