#include "periodic_heat/report.hpp"

#include <charconv>
#include <cmath>

namespace periodic_heat::report {

Json to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Json to_json(const LatticeVector& v) {
  Json out = Json::array();
  for (int x : v) out.push_back(x);
  return out;
}

Json to_json(const ValidationReport& r) {
  return Json{{"ok", r.ok()},
              {"positive", r.positive},
              {"connected", r.connected},
              {"generated_rank", r.generated_rank},
              {"index", r.index},
              {"messages", r.messages}};
}

Json to_json(const hodge::EffectiveMetric& m) {
  return Json{{"A", to_json(m.A)},
              {"B", to_json(m.B)},
              {"cell_volume", m.cell_volume},
              {"vol_X", m.vol_X},
              {"condition", m.condition},
              {"residuals", m.residuals},
              {"solver", {{"method", m.info.method}, {"iterations", m.info.iterations}, {"residual", m.info.residual}}}};
}

Json to_json(const bloch::GapReport& g) {
  Json out{{"epsilon", g.epsilon},
           {"min_lambda1_outside", g.min_lambda1_outside},
           {"argmin_outside", to_json(g.argmin_outside)},
           {"points_outside", g.points_outside},
           {"points_inside", g.points_inside}};
  out["min_lambda2_inside"] = g.min_lambda2_inside ? Json(*g.min_lambda2_inside) : Json(nullptr);
  if (!g.note.empty()) out["note"] = g.note;
  return out;
}

Json to_json(const heat::HeatKernelTable& t) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.window.size(); ++i) rows.push_back({{"v", to_json(t.window[i])}, {"k", t.values[i]}});
  return Json{{"t", t.t},
              {"N", t.N},
              {"max_imag_residue", t.max_imag_residue},
              {"spectral_tail", t.spectral_tail},
              {"aliasing_bound", t.aliasing_bound},
              {"tail_bound", t.tail_bound},
              {"values", rows}};
}

Json to_json(const heat::AsymptoticReport& r) {
  Json points = Json::array();
  for (const auto& p : r.points)
    points.push_back({{"t", p.t},
                      {"N", p.N},
                      {"region_points", p.region_points},
                      {"sup_error", p.sup_error},
                      {"argmax", to_json(p.argmax)},
                      {"argmax_radius", p.argmax_radius},
                      {"scaled_error", p.scaled_error},
                      {"kernel_at_zero", p.kernel_at_zero},
                      {"gaussian_at_zero", p.gaussian_at_zero},
                      {"error_at_zero", p.error_at_zero},
                      {"relative_error_at_zero", p.relative_error_at_zero},
                      {"aliasing_bound", p.aliasing_bound},
                      {"spectral_tail", p.spectral_tail}});
  return Json{{"C", r.C},
              {"rank", r.rank},
              {"slope", r.slope},
              {"intercept", r.intercept},
              {"predicted_exponent", r.predicted_exponent},
              {"boundary_drift", r.boundary_drift},
              {"points", points}};
}

Json to_json(const walk::CovarianceReport& r) {
  return Json{{"mean", to_json(r.mean)},
              {"mean_z", to_json(r.mean_z)},
              {"covariance", to_json(r.covariance)},
              {"expected", to_json(r.expected)},
              {"std_error", to_json(r.std_error)},
              {"z", to_json(r.z)},
              {"max_abs_z", r.max_abs_z},
              {"pass", r.pass}};
}

Json to_json(const walk::StableNormEstimate& s) {
  return Json{{"v", to_json(s.v)},
              {"n", s.n},
              {"d", s.d},
              {"ratios", s.ratios},
              {"norm", s.norm},
              {"c_est", s.c_est},
              {"error_bar", s.error_bar},
              {"pairs_checked", s.pairs_checked},
              {"max_subadditivity_violation", s.max_subadditivity_violation},
              {"subadditive", s.subadditive}};
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_bands_csv(std::ostream& out, const std::vector<bloch::BandData>& bands) {
  if (bands.empty()) return;
  const int k = bands.front().theta.dim();
  const Eigen::Index m = bands.front().eigenvalues.size();
  for (int j = 0; j < k; ++j) out << (j ? "," : "") << "theta_" << j + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",lambda_" << i + 1;
  out << '\n';
  for (const auto& b : bands) {
    for (int j = 0; j < k; ++j) out << (j ? "," : "") << format_double(b.theta.theta()[j]);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(b.eigenvalues[i]);
    out << '\n';
  }
}

void write_heat_csv(std::ostream& out, const heat::HeatKernelTable& table, const heat::GaussianPrediction& gauss) {
  const Eigen::Index k = table.window.empty() ? 0 : table.window.front().size();
  for (Eigen::Index j = 0; j < k; ++j) out << "v_" << j + 1 << ',';
  out << "k_value,gaussian,abs_error\n";
  for (std::size_t i = 0; i < table.window.size(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) out << table.window[i][j] << ',';
    out << format_double(table.values[i]) << ',' << format_double(gauss.values[i]) << ','
        << format_double(std::abs(table.values[i] - gauss.values[i])) << '\n';
  }
}

void write_stable_norm_csv(std::ostream& out, const walk::StableNormEstimate& est) {
  out << "n,d_n,d_n/n\n";
  for (std::size_t i = 0; i < est.n.size(); ++i)
    out << est.n[i] << ',' << format_double(est.d[i]) << ',' << format_double(est.ratios[i]) << '\n';
}

}  // namespace periodic_heat::report
