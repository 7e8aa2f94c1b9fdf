// Weight-by-weight constructions of ReLU approximants: step (cell-index)
// nets, point fitters, product and monomial nets, smooth-function
// approximants on the cube minus a thin gap region, and their gap-free
// median-filtered versions.  Every builder comes with a closed-form error
// bound and a grid certifier that measures the realized sup error.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reluc/network.hpp"
#include "reluc/targets.hpp"

namespace reluc {

// simple: any ReLU realization meeting the error contract, stats recorded.
// paper_budget: composition-based circuits that must fit the quoted
// width/depth budgets.
enum class BuildProfile { simple, paper_budget };
std::string to_string(BuildProfile profile);
BuildProfile profile_from_string(const std::string& s);

// Number of grid cells per axis used by the constructions:
// K = floor(N^(1/d))^2 * floor(M^(2/d)), computed in exact integer
// arithmetic (no floating-point roots).
std::int64_t grid_resolution(int N, int M, int d);

// The gap width delta defaults to its maximum allowed value 1/(3K).
double default_gap(std::int64_t K);

// Union over coordinates of the open gaps (k/K - delta, k/K), k = 1..K-1.
struct OmegaRegion {
  int d = 1;
  std::int64_t K = 1;
  double delta = 0.0;
};
bool omega_membership(const Eigen::VectorXd& x, const OmegaRegion& region);
double omega_measure_bound(const OmegaRegion& region);  // d * K * delta

struct GridSpec {
  int points_per_axis = 0;
  std::int64_t lattice_points = 0;
  int random_points = 0;
  std::uint64_t seed = 0;
  bool omega_excluded = false;
};

struct CertifyOptions {
  int points_per_axis = 0;  // 0 = auto: 1 + ceil(200/d), capped by max points
  std::int64_t max_lattice_points = 1'000'000;
  int random_points = 10'000;
  std::uint64_t seed = 2026;
  int jobs = 1;
};

struct ApproxCertificate {
  std::string construction;
  BuildProfile profile = BuildProfile::paper_budget;
  int N = 1, M = 1, d = 1;
  double beta = 0.0, B0 = 0.0;
  double bound_value = 0.0;
  double measured_sup_error = 0.0;
  bool pass = false;
  GridSpec grid;
  NetworkStats actual;
  std::optional<NetworkStats> budget;
  bool fd_fallback = false;
  std::optional<double> shift;  // median-filter shift actually used
  std::string notes;
};

std::string certificate_to_json(const ApproxCertificate& cert);
ApproxCertificate certificate_from_json(const std::string& text);
// Fixed-width human-readable table, one row per certificate.
std::string certificate_table(const std::vector<ApproxCertificate>& certs);

// Closed-form error bounds.
double holder_error_bound(double beta, int d, double B0, int N, int M);
double uniform_error_bound(double beta, int d, double B0, int N, int M);
double product_error_bound(int N, int M, double a, double b);
double monomial_error_bound(int order, int N, int M);
double fitter_tolerance(int N, int M, int s);

// Width/depth budgets for the paper_budget profile.  The size/neuron fields
// hold the rectangle upper bounds implied by (width, depth).
NetworkStats step_budget(int N, int M, int d);
NetworkStats fitter_budget(int N, int M, int s);
NetworkStats product_budget(int N, int M);
NetworkStats monomial_budget(int order, int N, int M);
NetworkStats mid_budget();
NetworkStats holder_budget(double beta, int d, int N, int M);
NetworkStats uniform_budget(double beta, int d, int N, int M);

// Scalar staircase psi(x) = k on [k/K, (k+1)/K - delta) (exactly k at and
// above k/K, ramping inside the final delta-gap of each interior cell).
Network build_step_net(int N, int M, int d, double delta,
                       BuildProfile profile = BuildProfile::paper_budget);

// Scalar net with |phi(i) - xi_i| <= (NM)^(-2s) for integer i and
// 0 <= phi <= 1 everywhere.  values must have length N^2 M^2 and lie in
// [0,1].
Network build_point_fitter(const std::vector<double>& values, int N, int M,
                           int s,
                           BuildProfile profile = BuildProfile::paper_budget);

// Two-input net approximating xy on [a,b]^2 within 6(b-a)^2 N^(-M);
// exact zero at the origin when the range is symmetric.
Network build_product_net(int N, int M, double a, double b,
                          BuildProfile profile = BuildProfile::paper_budget);

// x^alpha on [0,1]^d within 9k(N+1)^(-7kM), k = |alpha|_1 >= 1; output
// confined to [-1,1].
Network build_monomial_net(const MultiIndex& alpha, int N, int M,
                           BuildProfile profile = BuildProfile::paper_budget);

// Exact median of three reals; width 10 <= 14, depth 2.
Network build_mid_net();

// Approximant of target on [0,1]^d; certificate measures the sup error on a
// lattice excluding the gap region Omega(K, 1/(3K)).
std::pair<Network, ApproxCertificate> build_holder_approximant(
    const HolderTarget& target, int N, int M,
    BuildProfile profile = BuildProfile::paper_budget, bool allow_fd = false,
    const CertifyOptions& options = {});

// Median-filtered version certified on the full cube (no exclusion).  The
// per-axis shift defaults to 1/(3K); pass an explicit shift to use another
// convention.  The certificate records the shift used.
std::pair<Network, ApproxCertificate> build_uniform_approximant(
    const HolderTarget& target, int N, int M,
    BuildProfile profile = BuildProfile::paper_budget, bool allow_fd = false,
    const CertifyOptions& options = {},
    std::optional<double> shift = std::nullopt);

// Generic sup-error measurement of |net(x) - reference(x)| over a
// deterministic lattice plus random points, optionally excluding an
// OmegaRegion.  Pure; parallelizes over chunks when options.jobs > 1 with
// results independent of the job count.
struct SupMeasurement {
  double sup_error = 0.0;
  GridSpec grid;
};
SupMeasurement measure_sup_error(
    const Network& net,
    const std::function<double(const Eigen::VectorXd&)>& reference, int d,
    const std::optional<OmegaRegion>& exclude, const CertifyOptions& options);

// Certifiers for the elementary builders (used by the CLI and tests).
ApproxCertificate certify_step_net(const Network& net, int N, int M, int d,
                                   double delta, BuildProfile profile,
                                   int probes_per_cell = 10);
ApproxCertificate certify_point_fitter(const Network& net,
                                       const std::vector<double>& values,
                                       int N, int M, int s,
                                       BuildProfile profile);
ApproxCertificate certify_product_net(const Network& net, int N, int M,
                                      double a, double b, BuildProfile profile,
                                      int points_per_axis = 201);
ApproxCertificate certify_monomial_net(const Network& net,
                                       const MultiIndex& alpha, int N, int M,
                                       BuildProfile profile,
                                       const CertifyOptions& options = {});

}  // namespace reluc
