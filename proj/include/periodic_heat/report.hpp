#pragma once

// JSON and CSV renderings of the module results.

#include "periodic_heat/bloch.hpp"
#include "periodic_heat/heat.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/periodic_complex.hpp"
#include "periodic_heat/walk.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <ostream>
#include <vector>

namespace periodic_heat::report {

using Json = nlohmann::ordered_json;

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const LatticeVector& v);

Json to_json(const ValidationReport& r);
Json to_json(const hodge::EffectiveMetric& m);
Json to_json(const bloch::GapReport& g);
Json to_json(const heat::HeatKernelTable& t);
Json to_json(const heat::AsymptoticReport& r);
Json to_json(const walk::CovarianceReport& r);
Json to_json(const walk::StableNormEstimate& s);

/// Shortest round-trip decimal form.
std::string format_double(double x);

/// theta_1..theta_k, lambda_1..lambda_m
void write_bands_csv(std::ostream& out, const std::vector<bloch::BandData>& bands);
/// v_1..v_k, k_value, gaussian, abs_error
void write_heat_csv(std::ostream& out, const heat::HeatKernelTable& table, const heat::GaussianPrediction& gauss);
/// n, d_n, d_n/n
void write_stable_norm_csv(std::ostream& out, const walk::StableNormEstimate& est);

}  // namespace periodic_heat::report
