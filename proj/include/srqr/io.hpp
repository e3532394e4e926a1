// JSON/CSV serialization of the domain types, deterministic float formatting,
// and content hashing for artifact manifests.
#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "srqr/distortion.hpp"
#include "srqr/pansu.hpp"
#include "srqr/trap.hpp"
#include "srqr/tukia.hpp"

namespace srqr {

using nlohmann::json;

/// Shortest round-trip decimal representation; output is bit-identical
/// across runs.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json to_json(const SpherePoint& p) {
  json comps = json::array();
  for (int i = 0; i < p.z().size(); ++i)
    comps.push_back({{"re", p.z()[i].real()}, {"im", p.z()[i].imag()}});
  return {{"components", comps}};
}

inline SpherePoint sphere_point_from_json(const json& j) {
  const auto& comps = j.at("components");
  CVec z(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i)
    z[i] = Complex(comps[i].at("re").get<double>(), comps[i].at("im").get<double>());
  return SpherePoint(std::move(z));
}

inline json to_json(const LensSpec& spec) { return {{"p", spec.p}, {"q", spec.q}}; }

inline LensSpec lens_spec_from_json(const json& j) {
  return LensSpec(j.at("p").get<int>(), j.at("q").get<std::vector<int>>());
}

inline json to_json(const LensPoint& x) {
  return {{"representative", to_json(x.representative())}, {"spec", to_json(x.spec())}};
}

inline json to_json(const HorizontalPath& g) {
  json samples = json::array();
  for (std::size_t k = 0; k < g.size(); ++k)
    samples.push_back({{"t", g.time(k)}, {"point", to_json(g.sample(k))}});
  return {{"samples", samples}, {"max_segment_residual", g.max_segment_residual()}};
}

inline json to_json(const GradedHom& h) {
  return {{"A", {h.horizontal(0, 0), h.horizontal(0, 1), h.horizontal(1, 0),
                 h.horizontal(1, 1)}},
          {"tau", h.vertical},
          {"residual", h.fit_residual},
          {"h_schedule", h.h_schedule},
          {"cauchy_diffs", h.cauchy_diffs},
          {"converged", h.converged}};
}

inline json to_json(const TrapConfig& c) {
  return {{"a", c.a},
          {"spec", to_json(c.spec)},
          {"z0", to_json(c.z0)},
          {"preimage_count", c.preimage_count},
          {"modification_radius", c.modification_radius},
          {"conformal_radius", c.conformal_radius},
          {"inversion_rho", c.inversion_rho},
          {"inversion_d", c.inversion_d},
          {"neighborhood_radius_u", c.neighborhood_radius_u},
          {"neighborhood_radius_v", c.neighborhood_radius_v}};
}

/// Rebuild a trap from a serialized config (round-trip of the experiment
/// configuration: the deterministic construction re-derives the rest).
inline UQRMap trap_from_json(const json& j) {
  TrapOverrides ov;
  ov.z0 = sphere_point_from_json(j.at("z0"));
  ov.modification_radius = j.at("modification_radius").get<double>();
  ov.conformal_radius = j.at("conformal_radius").get<double>();
  ov.inversion_rho = j.at("inversion_rho").get<double>();
  return build_trap(j.at("a").get<int>(), lens_spec_from_json(j.at("spec")), ov);
}

inline json to_json(const ConformalStructure& cs) {
  json pts = json::array();
  for (std::size_t i = 0; i < cs.grid.size(); ++i) {
    const auto& m = cs.s[i].m();
    pts.push_back({{"point", to_json(cs.grid[i])},
                   {"s", {m(0, 0), m(0, 1), m(1, 0), m(1, 1)}},
                   {"orbit_radius", cs.orbit_radius[i]},
                   {"valid", bool(cs.valid[i])},
                   {"region", region_name(cs.region[i])}});
  }
  return {{"n_iterates", cs.n_iterates},
          {"m_nu", cs.m_nu},
          {"m_theta", cs.m_theta},
          {"exclusion_warning", cs.exclusion_warning},
          {"points", pts}};
}

/// Minimal deterministic CSV writer: header once, fixed column order,
/// %.17g floats.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
    row_count_ = 0;
  }

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size())
      throw ContractViolation("CsvWriter: column count mismatch");
    rows_.push_back(cells);
    ++row_count_;
  }
  void add_row_values(const std::vector<double>& vals) {
    std::vector<std::string> cells;
    cells.reserve(vals.size());
    for (double v : vals) cells.push_back(fmt_double(v));
    add_row(cells);
  }

  std::string str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i)
      out << header_[i] << (i + 1 < header_.size() ? "," : "\n");
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
    return out.str();
  }

  std::size_t rows() const { return row_count_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::size_t row_count_;
};

inline CsvWriter distortion_csv(const std::vector<std::pair<int, DistortionReport>>& reports) {
  CsvWriter csv({"point_id", "r", "sup", "inf", "ratio"});
  for (const auto& [id, rep] : reports) {
    for (const auto& row : rep.rows)
      csv.add_row({std::to_string(id), fmt_double(row.radius), fmt_double(row.sup),
                   fmt_double(row.inf), fmt_double(row.ratio)});
    csv.add_row({std::to_string(id), "0", "", "", fmt_double(rep.extrapolated)});
  }
  return csv;
}

inline CsvWriter iterate_csv(const std::vector<IterateRow>& rows) {
  CsvWriter csv({"n", "max_ratio", "excluded"});
  for (const auto& r : rows)
    csv.add_row({std::to_string(r.n), fmt_double(r.max_ratio), std::to_string(r.excluded)});
  return csv;
}

/// Julia cloud in Heisenberg chart coordinates (x, y, t, depth) for plotting.
inline CsvWriter julia_csv(const JuliaCloud& cloud, const HeisenbergChart& chart) {
  CsvWriter csv({"x", "y", "t", "depth", "cylinder", "diameter"});
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d v = chart.forward(cloud.points[i].representative());
    csv.add_row({fmt_double(v[0]), fmt_double(v[1]), fmt_double(v[2]),
                 std::to_string(cloud.depth), std::to_string(cloud.cylinder_key[i]),
                 fmt_double(cloud.point_diameters[i])});
  }
  return csv;
}

inline json to_json(const JuliaCloud& cloud) {
  json pts = json::array();
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    pts.push_back({{"representative", to_json(cloud.points[i].representative())},
                   {"cylinder", cloud.cylinder_key[i]},
                   {"seed", cloud.seed_id[i]},
                   {"diameter", cloud.point_diameters[i]}});
  return {{"depth", cloud.depth}, {"pruned", cloud.pruned}, {"points", pts}};
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace srqr
