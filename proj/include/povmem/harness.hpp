#pragma once

// Config-driven experiment drivers. Every driver writes CSV tables (the
// contract), best-effort SVG/PGM images, and a manifest with the config hash
// and seed. Identical config and seed give byte-identical CSVs.

#include <fftw3.h>
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "povmem/density_matrix.hpp"
#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"
#include "povmem/fourier_optics.hpp"
#include "povmem/measurement_tomo.hpp"
#include "povmem/report_io.hpp"
#include "povmem/storage_channel.hpp"
#include "povmem/vector_state.hpp"

namespace povmem::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";

enum class Realization { perfect_vortex, laguerre_gauss };

struct StateConfig {
  PpbDescriptor state;
  std::optional<NoiseSpec> fig2_noise;
  std::optional<NoiseSpec> fig3_noise;
};

struct TomographyConfig {
  double counts_per_setting = 0.0;  // 0: exact probabilities
  Estimator estimator = Estimator::clip;
};

struct HologramConfig {
  GridSpec grid{512, 8e-6, 795e-9};
  double carrier_period = 64e-6;
  double lens_f = 0.075;
};

struct ValidatePovConfig {
  std::vector<int> ls{1, 4};
  std::vector<double> ratios{5.0, 10.0, 20.0};
  double lens_f = 0.075;
  double envelope_waist_px = 32.0;
  GridSpec grid{512, 10e-6, 795e-9};
};

struct RadiusSweepConfig {
  int l_max = 5;
  bool bg_fourier = true;
  double lens_f = 0.075;
};

struct ExperimentConfig {
  GridSpec grid{512, 1.5625e-6, 795e-9};
  RingParams ring{100e-6, 20e-6};
  ChannelSpec channel{};
  std::optional<double> forced_kappa;
  Realization realization = Realization::perfect_vortex;
  double lg_waist = 1.0e-3;
  double lg_pitch = 32e-6;
  int l_min = -5;
  int l_max = 5;
  int alpha_points = 72;
  std::uint64_t seed = 1;
  fs::path output_dir = "out";
  std::vector<StateConfig> states;
  TomographyConfig tomography{};
  HologramConfig hologram{};
  ValidatePovConfig validate_pov{};
  RadiusSweepConfig radius_sweep{};
  std::string canonical;  // sorted-key JSON of the input document

  GridSpec lg_grid() const { return GridSpec{grid.n, lg_pitch, grid.wavelength}; }
  KetPolicy ket_policy() const { return KetPolicy{l_min, l_max, true}; }
};

// The four reference states: thetas 0, pi/2, pi, 3pi/2.
inline std::vector<StateConfig> reference_states() {
  return {{{1, 3, 0.0}, {}, {}}, {{-3, 4, 90.0}, {}, {}}, {{0, -5, 180.0}, {}, {}}, {{2, -2, 270.0}, {}, {}}};
}

// Depolarizing weight that yields visibility V for a balanced pure state.
inline double depolarizing_for_visibility(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError("visibility must lie in [0, 1]");
  return 1.0 - v;
}

// Depolarizing weight that yields fidelity F (>= 1/4) for a balanced pure state.
inline double depolarizing_for_fidelity(double f) {
  if (!(f >= 0.25 && f <= 1.0)) throw DomainError("fidelity must lie in [1/4, 1]");
  return 4.0 * (1.0 - f) / 3.0;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

// Reads keys from one JSON object and rejects keys nobody asked for.
class Block {
 public:
  Block(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + where_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline double positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be > 0");
  return v;
}

inline NoiseSpec parse_noise(const json& j, const std::string& where) {
  Block b(j, where);
  const double p_dep = b.get<double>("p_dep", 0.0);
  const double p_phi = b.get<double>("p_phi", 0.0);
  b.finish();
  try {
    return NoiseSpec::make(p_dep, p_phi);
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& doc) {
  using detail::Block;
  using detail::positive;
  ExperimentConfig cfg;
  cfg.canonical = doc.dump();
  Block top(doc, "config");

  try {
    double wavelength = cfg.grid.wavelength;
    if (top.has("grid")) {
      Block g(top.raw("grid"), "grid");
      const int n = g.get<int>("n", cfg.grid.n);
      const double pitch = positive(g.get<double>("pitch_um", cfg.grid.pitch * 1e6), "grid.pitch_um") * 1e-6;
      wavelength = positive(g.get<double>("wavelength_nm", wavelength * 1e9), "grid.wavelength_nm") * 1e-9;
      g.finish();
      cfg.grid = GridSpec::make(n, pitch, wavelength);
    }
    cfg.hologram.grid.wavelength = cfg.grid.wavelength;
    cfg.validate_pov.grid.wavelength = cfg.grid.wavelength;

    if (top.has("ring")) {
      Block r(top.raw("ring"), "ring");
      cfg.ring.radius = positive(r.get<double>("radius_um", cfg.ring.radius * 1e6), "ring.radius_um") * 1e-6;
      cfg.ring.waist = positive(r.get<double>("waist_um", cfg.ring.waist * 1e6), "ring.waist_um") * 1e-6;
      r.finish();
    }
    if (cfg.ring.radius + cfg.ring.waist >= cfg.grid.extent() / 4.0) {
      throw ConfigError("ring does not fit the grid: radius + waist must be < n * pitch / 4");
    }

    if (top.has("channel")) {
      Block c(top.raw("channel"), "channel");
      const double eta0 = c.get<double>("eta0", cfg.channel.eta0);
      const double sigma_a = c.get<double>("sigma_a_mm", cfg.channel.sigma_a * 1e3) * 1e-3;
      const double p_dep = c.get<double>("p_dep", 0.0);
      const double p_phi = c.get<double>("p_phi", 0.0);
      const double t_us = c.get<double>("storage_time_us", cfg.channel.storage_time * 1e6);
      const auto conv = parse_amplitude_convention(c.get<std::string>("amplitude_convention", "eta"));
      if (c.has("forced_kappa")) cfg.forced_kappa = positive(c.get<double>("forced_kappa", 1.0), "channel.forced_kappa");
      c.finish();
      cfg.channel = ChannelSpec::make(eta0, sigma_a, NoiseSpec::make(p_dep, p_phi), t_us * 1e-6, conv);
    }

    const std::string real = top.get<std::string>("realization", "pov");
    if (real == "pov") {
      cfg.realization = Realization::perfect_vortex;
    } else if (real == "lg") {
      cfg.realization = Realization::laguerre_gauss;
    } else {
      throw ConfigError("realization must be \"pov\" or \"lg\"");
    }
    if (top.has("lg")) {
      Block b(top.raw("lg"), "lg");
      cfg.lg_waist = positive(b.get<double>("waist_um", cfg.lg_waist * 1e6), "lg.waist_um") * 1e-6;
      cfg.lg_pitch = positive(b.get<double>("pitch_um", cfg.lg_pitch * 1e6), "lg.pitch_um") * 1e-6;
      b.finish();
    }

    if (top.has("l_range")) {
      const auto range = top.raw("l_range").get<std::vector<int>>();
      if (range.size() != 2 || range[0] > range[1]) throw ConfigError("l_range must be [min, max] with min <= max");
      cfg.l_min = range[0];
      cfg.l_max = range[1];
    }
    cfg.alpha_points = top.get<int>("alpha_points", cfg.alpha_points);
    if (cfg.alpha_points < 8) throw ConfigError("alpha_points must be >= 8");
    cfg.seed = top.get<std::uint64_t>("seed", cfg.seed);
    cfg.output_dir = top.get<std::string>("output_dir", cfg.output_dir.string());

    if (top.has("states")) {
      const json& arr = top.raw("states");
      if (!arr.is_array() || arr.empty()) throw ConfigError("states must be a non-empty array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "states[" + std::to_string(i) + "]";
        StateConfig sc;
        if (arr[i].is_string()) {
          sc.state = PpbDescriptor::parse(arr[i].get<std::string>());
        } else {
          Block s(arr[i], where);
          if (!s.has("state")) throw ConfigError(where + ".state is required");
          sc.state = PpbDescriptor::parse(s.get<std::string>("state", ""));
          if (s.has("noise")) {
            const NoiseSpec n = detail::parse_noise(s.raw("noise"), where + ".noise");
            sc.fig2_noise = n;
            sc.fig3_noise = n;
          }
          if (s.has("fig2_noise")) sc.fig2_noise = detail::parse_noise(s.raw("fig2_noise"), where + ".fig2_noise");
          if (s.has("fig3_noise")) sc.fig3_noise = detail::parse_noise(s.raw("fig3_noise"), where + ".fig3_noise");
          s.finish();
        }
        cfg.states.push_back(sc);
      }
    } else {
      cfg.states = reference_states();
    }
    for (const auto& s : cfg.states) {
      for (int l : {s.state.l1, s.state.l2}) {
        if (l < cfg.l_min || l > cfg.l_max) throw ConfigError("state " + s.state.str() + " outside l_range");
      }
    }

    if (top.has("tomography")) {
      Block t(top.raw("tomography"), "tomography");
      cfg.tomography.counts_per_setting = t.get<double>("counts_per_setting", 0.0);
      if (cfg.tomography.counts_per_setting < 0.0) throw ConfigError("tomography.counts_per_setting must be >= 0");
      const std::string est = t.get<std::string>("estimator", "clip");
      if (est == "clip") {
        cfg.tomography.estimator = Estimator::clip;
      } else if (est == "mle") {
        cfg.tomography.estimator = Estimator::mle;
      } else {
        throw ConfigError("tomography.estimator must be \"clip\" or \"mle\"");
      }
      t.finish();
    }

    if (top.has("hologram")) {
      Block h(top.raw("hologram"), "hologram");
      const int n = h.get<int>("n", cfg.hologram.grid.n);
      const double pitch = positive(h.get<double>("pitch_um", cfg.hologram.grid.pitch * 1e6), "hologram.pitch_um") * 1e-6;
      cfg.hologram.grid = GridSpec::make(n, pitch, cfg.grid.wavelength);
      cfg.hologram.carrier_period =
          positive(h.get<double>("carrier_period_um", cfg.hologram.carrier_period * 1e6), "hologram.carrier_period_um") * 1e-6;
      cfg.hologram.lens_f = positive(h.get<double>("lens_f_mm", cfg.hologram.lens_f * 1e3), "hologram.lens_f_mm") * 1e-3;
      h.finish();
    }

    if (top.has("validate_pov")) {
      Block v(top.raw("validate_pov"), "validate_pov");
      cfg.validate_pov.ls = v.get<std::vector<int>>("l", cfg.validate_pov.ls);
      cfg.validate_pov.ratios = v.get<std::vector<double>>("ratios", cfg.validate_pov.ratios);
      cfg.validate_pov.lens_f = positive(v.get<double>("lens_f_mm", cfg.validate_pov.lens_f * 1e3), "validate_pov.lens_f_mm") * 1e-3;
      cfg.validate_pov.envelope_waist_px =
          positive(v.get<double>("envelope_waist_px", cfg.validate_pov.envelope_waist_px), "validate_pov.envelope_waist_px");
      const int n = v.get<int>("n", cfg.validate_pov.grid.n);
      const double pitch = positive(v.get<double>("pitch_um", cfg.validate_pov.grid.pitch * 1e6), "validate_pov.pitch_um") * 1e-6;
      cfg.validate_pov.grid = GridSpec::make(n, pitch, cfg.grid.wavelength);
      v.finish();
    }

    if (top.has("radius_sweep")) {
      Block r(top.raw("radius_sweep"), "radius_sweep");
      cfg.radius_sweep.l_max = r.get<int>("l_max", cfg.radius_sweep.l_max);
      if (cfg.radius_sweep.l_max < 0) throw ConfigError("radius_sweep.l_max must be >= 0");
      cfg.radius_sweep.bg_fourier = r.get<bool>("bg_fourier", cfg.radius_sweep.bg_fourier);
      cfg.radius_sweep.lens_f = positive(r.get<double>("lens_f_mm", cfg.radius_sweep.lens_f * 1e3), "radius_sweep.lens_f_mm") * 1e-3;
      r.finish();
    }
    top.finish();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

inline fs::path prepare_output(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  return cfg.output_dir;
}

inline void write_manifest(const ExperimentConfig& cfg, const std::string& verb, const std::vector<fs::path>& outputs) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.canonical)));
  json m;
  m["verb"] = verb;
  m["config_hash_fnv1a64"] = hash;
  m["seed"] = cfg.seed;
  m["versions"] = {{"povmem", kVersion},
                   {"fftw", std::string(fftw_version)},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  std::vector<std::string> names;
  for (const auto& p : outputs) names.push_back(p.filename().string());
  m["outputs"] = names;
  report::write_text(cfg.output_dir / (verb + "_manifest.json"), m.dump(2) + "\n");
}

inline ModeSpec arm_mode(const ExperimentConfig& cfg, int l) {
  if (cfg.realization == Realization::laguerre_gauss) return LaguerreGaussMode{l, cfg.lg_waist};
  return PerfectVortexMode{l, cfg.ring.radius, cfg.ring.waist};
}

inline GridSpec arm_grid(const ExperimentConfig& cfg) {
  return cfg.realization == Realization::laguerre_gauss ? cfg.lg_grid() : cfg.grid;
}

inline PoincareBeam make_beam(const ExperimentConfig& cfg, const PpbDescriptor& d) {
  if (cfg.realization == Realization::laguerre_gauss) {
    return make_lg_poincare_beam(d.l1, d.l2, d.theta_rad(), cfg.lg_waist, cfg.lg_grid(), cfg.ket_policy());
  }
  return make_ppb(d.l1, d.l2, d.theta_rad(), cfg.ring, cfg.grid, cfg.ket_policy());
}

inline ChannelOutput run_channel(const ExperimentConfig& cfg, const PoincareBeam& beam, const ChannelSpec& ch) {
  if (cfg.forced_kappa) {
    const double eta1 = mode_efficiency(beam.field.h(), ch);
    return apply_channel(beam.ket, eta1, *cfg.forced_kappa * eta1, ch);
  }
  return apply_channel(beam.ket, beam.field, ch);
}

inline std::string state_tag(std::size_t index) { return "psi" + std::to_string(index + 1); }

inline std::vector<std::string> basis_labels() { return {"HL1", "HL2", "VL1", "VL2"}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// fig2: interference scans

struct Fig2Row {
  PpbDescriptor state;
  double theta_set;
  double fit_theta;
  double fit_visibility;
  ChannelReport report;
  InterferenceScan scan;
};

struct Fig2Result {
  std::vector<Fig2Row> rows;
  std::vector<fs::path> files;
};

inline Fig2Result run_fig2(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  const auto alpha = uniform_angles(cfg.alpha_points);
  Fig2Result res;
  for (std::size_t i = 0; i < cfg.states.size(); ++i) {
    const auto& sc = cfg.states[i];
    const ChannelSpec ch = sc.fig2_noise ? cfg.channel.with_noise(*sc.fig2_noise) : cfg.channel;
    const PoincareBeam beam = detail::make_beam(cfg, sc.state);
    const ChannelOutput co = detail::run_channel(cfg, beam, ch);
    InterferenceScan scan = interference_scan(co.state, wrap_phase(sc.state.theta_rad()), alpha);

    const std::string tag = detail::state_tag(i);
    const fs::path csv = out / ("fig2_" + tag + "_scan.csv");
    report::CsvWriter w(csv);
    w.row({"alpha_rad", "intensity", "fit_theta", "fit_V"});
    for (std::size_t k = 0; k < scan.alpha.size(); ++k) {
      w.row({report::num(scan.alpha[k]), report::num(scan.intensity[k]), report::num(scan.fit.theta),
             report::num(scan.fit.visibility)});
    }
    res.files.push_back(csv);

    std::vector<double> fx, fy;
    for (int k = 0; k <= 200; ++k) {
      const double a = kTwoPi * k / 200.0;
      fx.push_back(a);
      fy.push_back(scan.fit.amplitude * (1.0 + scan.fit.visibility * std::cos(scan.fit.theta - a)));
    }
    const fs::path svg = out / ("fig2_" + tag + "_scan.svg");
    report::line_plot_svg(svg, tag + " " + sc.state.str() + "  V=" + report::num(scan.fit.visibility), scan.alpha,
                          scan.intensity, fx, fy);
    res.files.push_back(svg);

    res.rows.push_back(Fig2Row{sc.state, wrap_phase(sc.state.theta_rad()), scan.fit.theta, scan.fit.visibility,
                               co.report, std::move(scan)});
  }

  const fs::path summary = out / "fig2_summary.csv";
  report::CsvWriter w(summary);
  w.row({"state", "descriptor", "theta_set_rad", "fit_theta_rad", "fit_V", "eta1", "eta2", "kappa"});
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    w.row({detail::state_tag(i), r.state.str(), report::num(r.theta_set), report::num(r.fit_theta),
           report::num(r.fit_visibility), report::num(r.report.eta1), report::num(r.report.eta2),
           report::num(r.report.kappa)});
  }
  res.files.push_back(summary);
  detail::write_manifest(cfg, "fig2", res.files);
  return res;
}

// ---------------------------------------------------------------------------
// fig3: tomography of the retrieved states

struct Fig3Row {
  PpbDescriptor state;
  DensityMatrix reconstructed;
  DensityMatrix ideal;
  double fidelity;
  ChannelReport report;
};

struct Fig3Result {
  std::vector<Fig3Row> rows;
  std::vector<fs::path> files;
};

inline Fig3Result run_fig3(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  Fig3Result res;
  for (std::size_t i = 0; i < cfg.states.size(); ++i) {
    const auto& sc = cfg.states[i];
    if (sc.state.l1 == sc.state.l2) throw ConfigError("fig3 tomography needs L1 != L2, got " + sc.state.str());
    const ChannelSpec ch = sc.fig3_noise ? cfg.channel.with_noise(*sc.fig3_noise) : cfg.channel;
    const PoincareBeam beam = detail::make_beam(cfg, sc.state);
    const ChannelOutput co = detail::run_channel(cfg, beam, ch);

    const auto settings = tomography_settings(sc.state.l1, sc.state.l2);
    std::vector<double> probs = forward_probabilities(co.state, settings);
    if (cfg.tomography.counts_per_setting > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      probs = sample_poisson_frequencies(probs, cfg.tomography.counts_per_setting, rng);
    }
    const DensityMatrix rho = reconstruct(probs, settings, cfg.tomography.estimator);
    const DensityMatrix ideal = beam.ket.projector();
    const double f = fidelity(rho, ideal);

    const std::string tag = detail::state_tag(i);
    const fs::path csv = out / ("fig3_" + tag + "_rho.csv");
    report::CsvWriter w(csv);
    w.row({"re", "im"});
    std::vector<double> re, im;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        w.row({report::num(rho(r, c).real()), report::num(rho(r, c).imag())});
        re.push_back(rho(r, c).real());
        im.push_back(rho(r, c).imag());
      }
    }
    res.files.push_back(csv);
    std::vector<std::string> labels;
    for (const auto& a : detail::basis_labels())
      for (const auto& b : detail::basis_labels()) labels.push_back(a + "." + b);
    const fs::path svg = out / ("fig3_" + tag + "_rho.svg");
    report::matrix_bars_svg(svg, tag + " " + sc.state.str() + "  F=" + report::num(f), re, im, labels);
    res.files.push_back(svg);

    res.rows.push_back(Fig3Row{sc.state, rho, ideal, f, co.report});
  }

  const fs::path table = out / "fig3_fidelity.csv";
  report::CsvWriter w(table);
  w.row({"state", "descriptor", "fidelity", "predicted_fidelity", "kappa", "eta1", "eta2"});
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    w.row({detail::state_tag(i), r.state.str(), report::num(r.fidelity), report::num(r.report.predicted_fidelity),
           report::num(r.report.kappa), report::num(r.report.eta1), report::num(r.report.eta2)});
  }
  res.files.push_back(table);
  detail::write_manifest(cfg, "fig3", res.files);
  return res;
}

// ---------------------------------------------------------------------------
// fig4: fidelity estimates over the (L1, L2) grid

struct Fig4Cell {
  int l1;
  int l2;
  double v_oam;  // NaN on the diagonal
  double v_pol;
  double visibility;
  double fidelity_estimate;
  double kappa;
};

struct Fig4Result {
  std::vector<int> ls;
  std::vector<std::vector<Fig4Cell>> grid;  // [row L1][col L2]
  std::vector<fs::path> files;

  double fidelity(int l1, int l2) const {
    return grid[static_cast<std::size_t>(l1 - ls.front())][static_cast<std::size_t>(l2 - ls.front())].fidelity_estimate;
  }
};

// Visibility protocol: OAM visibility with the (H+V) analyzer and polarization
// visibility with the (L1+L2) analyzer, each from the highest and lowest ideal
// projection, averaged; the diagonal uses the polarization visibility alone.
inline Fig4Cell fig4_cell(const DensityMatrix& rho, int l1, int l2, double theta, double kappa) {
  const double v_pol = extremal_visibility(rho, theta, Dof::polarization);
  double v_oam = std::numeric_limits<double>::quiet_NaN();
  double v = v_pol;
  if (l1 != l2) {
    v_oam = extremal_visibility(rho, theta, Dof::oam);
    v = 0.5 * (v_oam + v_pol);
  }
  return Fig4Cell{l1, l2, v_oam, v_pol, v, estimate_fidelity_from_visibility(v), kappa};
}

inline Fig4Result run_fig4(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  Fig4Result res;
  for (int l = cfg.l_min; l <= cfg.l_max; ++l) res.ls.push_back(l);

  // Arm efficiency depends only on the arm's intensity profile, so it is
  // computed once per topological charge.
  std::map<int, double> eta;
  const GridSpec g = detail::arm_grid(cfg);
  for (int l : res.ls) eta[l] = mode_efficiency(synthesize(detail::arm_mode(cfg, l), g), cfg.channel);

  const double theta = 0.0;
  for (int l1 : res.ls) {
    std::vector<Fig4Cell> row;
    for (int l2 : res.ls) {
      Ket4 c = Ket4::Zero();
      c(basis_index(Pol::H, Oam::L1)) = 1.0;
      c(basis_index(Pol::V, Oam::L2)) = std::polar(1.0, theta);
      const TwoDofKet ket = TwoDofKet::make(c, l1, l2, cfg.ket_policy());
      const double eta1 = eta.at(l1);
      const double eta2 = cfg.forced_kappa ? *cfg.forced_kappa * eta1 : eta.at(l2);
      const ChannelOutput co = apply_channel(ket, eta1, eta2, cfg.channel);
      row.push_back(fig4_cell(co.state, l1, l2, theta, co.report.kappa));
    }
    res.grid.push_back(std::move(row));
  }

  const fs::path longform = out / "fig4_grid.csv";
  {
    report::CsvWriter w(longform);
    w.row({"L1", "L2", "V_oam", "V_pol", "V", "F_est", "kappa"});
    for (const auto& row : res.grid) {
      for (const auto& c : row) {
        w.row({std::to_string(c.l1), std::to_string(c.l2), std::isnan(c.v_oam) ? "" : report::num(c.v_oam),
               report::num(c.v_pol), report::num(c.visibility), report::num(c.fidelity_estimate),
               report::num(c.kappa)});
      }
    }
  }
  res.files.push_back(longform);

  const fs::path matrix = out / "fig4_fidelity_matrix.csv";
  std::vector<std::vector<double>> values;
  {
    report::CsvWriter w(matrix);
    std::vector<std::string> header{"L1\\L2"};
    for (int l : res.ls) header.push_back(std::to_string(l));
    w.row(header);
    for (const auto& row : res.grid) {
      std::vector<std::string> cells{std::to_string(row.front().l1)};
      std::vector<double> vals;
      for (const auto& c : row) {
        cells.push_back(report::num(c.fidelity_estimate));
        vals.push_back(c.fidelity_estimate);
      }
      w.row(cells);
      values.push_back(vals);
    }
  }
  res.files.push_back(matrix);

  const fs::path svg = out / "fig4_heatmap.svg";
  report::heatmap_svg(svg,
                      std::string("Estimated fidelity F=(1+3V)/4, ") +
                          (cfg.realization == Realization::laguerre_gauss ? "LG arms" : "POV arms"),
                      values, res.ls, res.ls, 0.5, 1.0);
  res.files.push_back(svg);
  detail::write_manifest(cfg, "fig4", res.files);
  return res;
}

// ---------------------------------------------------------------------------
// Ring radius and storage efficiency versus topological charge

struct RadiusSweepRow {
  int l;
  double pov_ring_radius;
  double pov_efficiency;
  double lg_ring_radius;
  double lg_peak_radius;
  double lg_analytic_peak;
  double lg_efficiency;
  double bg_fourier_ring_radius;  // NaN when disabled
  double bg_fourier_efficiency;
};

struct RadiusSweepResult {
  std::vector<RadiusSweepRow> rows;
  std::vector<fs::path> files;
};

inline RadiusSweepResult run_radius_sweep(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  RadiusSweepResult res;
  const GridSpec lg_grid = cfg.lg_grid();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Input plane for the Bessel-Gauss route, chosen so the lens maps it onto
  // the default grid.
  const double f = cfg.radius_sweep.lens_f;
  const double k = cfg.grid.wave_number();
  const GridSpec bg_grid =
      GridSpec::make(cfg.grid.n, cfg.grid.wavelength * f / (cfg.grid.n * cfg.grid.pitch), cfg.grid.wavelength);

  for (int l = -cfg.radius_sweep.l_max; l <= cfg.radius_sweep.l_max; ++l) {
    RadiusSweepRow row{l, 0, 0, 0, 0, 0, 0, nan, nan};
    const TransverseField pov = synthesize(PerfectVortexMode{l, cfg.ring.radius, cfg.ring.waist}, cfg.grid);
    row.pov_ring_radius = ring_radius(pov);
    row.pov_efficiency = mode_efficiency(pov, cfg.channel);

    const TransverseField lg = synthesize(LaguerreGaussMode{l, cfg.lg_waist}, lg_grid);
    row.lg_ring_radius = ring_radius(lg);
    row.lg_peak_radius = peak_radius(lg);
    row.lg_analytic_peak = cfg.lg_waist * std::sqrt(std::abs(l) / 2.0);
    row.lg_efficiency = mode_efficiency(lg, cfg.channel);

    if (cfg.radius_sweep.bg_fourier) {
      const BesselGaussMode bg{l, cfg.ring.radius * k / f, 2.0 * f / (k * cfg.ring.waist)};
      const TransverseField ring = lens_fourier(synthesize(bg, bg_grid), LensSpec::make(f));
      row.bg_fourier_ring_radius = ring_radius(ring);
      row.bg_fourier_efficiency = mode_efficiency(ring, cfg.channel);
    }
    res.rows.push_back(row);
  }

  const fs::path csv = out / "radius_sweep.csv";
  report::CsvWriter w(csv);
  w.row({"l", "pov_ring_radius_um", "pov_efficiency", "lg_ring_radius_um", "lg_peak_radius_um", "lg_analytic_peak_um",
         "lg_efficiency", "bg_fourier_ring_radius_um", "bg_fourier_efficiency"});
  auto opt = [](double v, double scale) { return std::isnan(v) ? std::string() : report::num(v * scale); };
  for (const auto& r : res.rows) {
    w.row({std::to_string(r.l), report::num(r.pov_ring_radius * 1e6), report::num(r.pov_efficiency),
           report::num(r.lg_ring_radius * 1e6), report::num(r.lg_peak_radius * 1e6),
           report::num(r.lg_analytic_peak * 1e6), report::num(r.lg_efficiency), opt(r.bg_fourier_ring_radius, 1e6),
           opt(r.bg_fourier_efficiency, 1.0)});
  }
  res.files.push_back(csv);
  detail::write_manifest(cfg, "radius-sweep", res.files);
  return res;
}

// ---------------------------------------------------------------------------
// SLM holograms for the configured states

struct HologramResult {
  std::vector<fs::path> files;
};

inline HologramResult run_hologram(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  HologramResult res;
  const auto& hc = cfg.hologram;
  const double k = hc.grid.wave_number();
  const double k_r = cfg.ring.radius * k / hc.lens_f;
  const double w_env = 2.0 * hc.lens_f / (k * cfg.ring.waist);
  for (std::size_t i = 0; i < cfg.states.size(); ++i) {
    const auto& d = cfg.states[i].state;
    for (auto [pol, l] : {std::pair{"H", d.l1}, std::pair{"V", d.l2}}) {
      const HologramMask mask = make_hologram(BesselGaussMode{l, k_r, w_env}, hc.grid, hc.carrier_period);
      const fs::path p = out / ("hologram_" + detail::state_tag(i) + "_" + pol + "_L" + std::to_string(l) + ".pgm");
      export_mask_image(mask, p);
      res.files.push_back(p);
    }
  }
  detail::write_manifest(cfg, "hologram", res.files);
  return res;
}

// ---------------------------------------------------------------------------
// Bessel-Gauss -> perfect vortex residual sweep

struct ValidatePovRow {
  int l;
  double ratio;
  std::optional<double> residual;
  std::string status;  // ok | regime_violation | sampling_error
};

struct ValidatePovResult {
  std::vector<ValidatePovRow> rows;
  std::vector<fs::path> files;
};

inline ValidatePovResult run_validate_pov(const ExperimentConfig& cfg) {
  const fs::path out = detail::prepare_output(cfg);
  const auto& vc = cfg.validate_pov;
  ValidatePovResult res;
  const double w_env = vc.envelope_waist_px * vc.grid.pitch;
  for (int l : vc.ls) {
    for (double ratio : vc.ratios) {
      ValidatePovRow row{l, ratio, std::nullopt, "ok"};
      try {
        // ring / waist = k_r * w_env / 2
        const BesselGaussMode bg{l, 2.0 * ratio / w_env, w_env};
        row.residual = validate_pov_analytic(bg, LensSpec::make(vc.lens_f), vc.grid);
      } catch (const RegimeViolation&) {
        row.status = "regime_violation";
      } catch (const SamplingError&) {
        row.status = "sampling_error";
      }
      res.rows.push_back(row);
    }
  }
  const fs::path csv = out / "validate_pov.csv";
  report::CsvWriter w(csv);
  w.row({"l", "ratio", "residual", "status"});
  for (const auto& r : res.rows) {
    w.row({std::to_string(r.l), report::num(r.ratio), r.residual ? report::num(*r.residual) : "", r.status});
  }
  res.files.push_back(csv);
  detail::write_manifest(cfg, "validate-pov", res.files);
  return res;
}

}  // namespace povmem::harness
