#include "condvar/hessian.hpp"

#include <cmath>

#include "condvar/errors.hpp"
#include "condvar/kernels.hpp"

namespace condvar {
namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

std::vector<double> row_major(const Eigen::MatrixXd& a) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a;
  return {rm.data(), rm.data() + rm.size()};
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ModelDescriptor& d) {
  return {{"operator", d.operator_name}, {"L_B", optional_json(d.lb)},
          {"L_R", optional_json(d.lr)},  {"n", d.n},
          {"p", d.p},                    {"sigma_b", d.sigma_b},
          {"sigma_r", d.sigma_r},        {"seed", optional_json(d.seed)}};
}

HessianModel::HessianModel(std::shared_ptr<const SpdFactorization> b_correlation,
                           double b_variance,
                           std::shared_ptr<const SpdFactorization> r_correlation,
                           double r_variance, std::shared_ptr<const ObservationOperator> h)
    : b_(std::move(b_correlation)),
      b_variance_(b_variance),
      r_(std::move(r_correlation)),
      r_variance_(r_variance),
      h_(std::move(h)) {
  if (!b_ || !r_ || !h_) throw ParameterError("HessianModel: null component");
  if (!(b_variance_ > 0.0) || !(r_variance_ > 0.0))
    throw ParameterError("HessianModel: variances must be positive");
  if (b_->dim() != h_->n())
    throw ParameterError("HessianModel: B is " + std::to_string(b_->dim()) +
                         "-dimensional but H has " + std::to_string(h_->n()) + " columns");
  if (r_->dim() != h_->p())
    throw ParameterError("HessianModel: R is " + std::to_string(r_->dim()) +
                         "-dimensional but H has " + std::to_string(h_->p()) + " rows");
  if (h_->p() >= h_->n()) throw ParameterError("HessianModel: requires p < n");

  descriptor_.operator_name = std::string(operator_name(h_->kind()));
  descriptor_.n = h_->n();
  descriptor_.p = h_->p();
  descriptor_.sigma_b = std::sqrt(b_variance_);
  descriptor_.sigma_r = std::sqrt(r_variance_);
  descriptor_.seed = h_->seed();
}

HessianModel HessianModel::from_correlations(const CorrelationMatrix& b, double b_variance,
                                             const CorrelationMatrix& r, double r_variance,
                                             ObservationOperator h) {
  HessianModel m(std::make_shared<const SpdFactorization>(b.entries()), b_variance,
                 std::make_shared<const SpdFactorization>(r.entries()), r_variance,
                 std::make_shared<const ObservationOperator>(std::move(h)));
  auto d = m.descriptor();
  d.lb = b.lengthscale();
  d.lr = r.lengthscale();
  m.set_descriptor(d);
  return m;
}

Eigen::MatrixXd HessianModel::hbht() const { return h_->congruence(b()); }

Eigen::MatrixXd HessianModel::whitened_hbht() const {
  return variance_ratio() * whitened_correlation_hbht();
}

Eigen::MatrixXd HessianModel::whitened_correlation_hbht() const {
  const Eigen::MatrixXd& ris = r_->inverse_sqrt();
  return symmetrized(ris * h_->congruence(b_->matrix()) * ris);
}

Eigen::MatrixXd assemble_preconditioned(const HessianModel& m) {
  // W = B~^{1/2} H^T R~^{-1/2} from the correlations alone; the variances
  // only enter through their ratio. Columns of B~^{1/2} H^T are weighted
  // sums of columns of B~^{1/2}.
  const Eigen::MatrixXd& bs = m.b_correlation().sqrt();
  const auto n = static_cast<Eigen::Index>(m.n());
  const auto p = static_cast<Eigen::Index>(m.p());
  Eigen::MatrixXd bht = Eigen::MatrixXd::Zero(n, p);
  const auto& rows = m.h().rows();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& e : rows[i])
      bht.col(static_cast<Eigen::Index>(i)) += e.weight * bs.col(static_cast<Eigen::Index>(e.column));
  const Eigen::MatrixXd w = bht * m.r_correlation().inverse_sqrt();
  Eigen::MatrixXd s = m.variance_ratio() * (w * w.transpose());
  s.diagonal().array() += 1.0;
  return symmetrized(s);
}

Eigen::MatrixXd assemble_unpreconditioned(const HessianModel& m) {
  const Eigen::MatrixXd h = m.h().dense();
  Eigen::MatrixXd s = m.b_inverse() + h.transpose() * m.r_inverse() * h;
  return symmetrized(s);
}

double kappa_via_rank_p(const HessianModel& m) {
  return 1.0 + m.variance_ratio() * symmetric_eigenvalues(m.whitened_correlation_hbht())(0);
}

PreconditionedHessianOperator::PreconditionedHessianOperator(const HessianModel& m)
    : n_(m.n()),
      p_(m.p()),
      b_sqrt_(row_major(m.b_sqrt())),
      r_inverse_(row_major(m.r_inverse())),
      h_(std::make_shared<const ObservationOperator>(m.h())) {}

void PreconditionedHessianOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_)
    throw ParameterError("PreconditionedHessianOperator: length mismatch");
  std::vector<double> u(n_), obs(p_), weighted(p_), back(n_);
  kernels::gemv(b_sqrt_, n_, n_, x, u);
  h_->apply(u, obs);
  kernels::gemv(r_inverse_, p_, p_, obs, weighted);
  h_->apply_transpose(weighted, back);
  kernels::gemv(b_sqrt_, n_, n_, back, y);
  kernels::axpy(1.0, x, y);
}

LinearOperator PreconditionedHessianOperator::as_linear_operator() const {
  return [self = *this](std::span<const double> in, std::span<double> out) { self.apply(in, out); };
}

std::size_t count_clusters(std::span<const double> v, double gap) {
  if (v.empty()) return 0;
  std::size_t clusters = 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double hi = v[i - 1], lo = v[i];
    const double scale = std::max(std::abs(hi), std::abs(lo));
    if (scale > 0.0 && (hi - lo) / scale >= gap) ++clusters;
  }
  return clusters;
}

SpectrumReport spectrum(const Eigen::MatrixXd& matrix, const SpectrumOptions& options) {
  require_symmetric(matrix, 1e-10, "spectrum");
  SpectrumReport s;
  s.cluster_gap = options.cluster_gap;
  s.eigenvalues = symmetric_eigenvalues(matrix);
  const double lmin = s.eigenvalues(s.eigenvalues.size() - 1);
  if (!(lmin > 0.0))
    throw ParameterError("spectrum: matrix is not positive definite, condition number undefined");
  s.kappa = s.eigenvalues(0) / lmin;
  s.cluster_count = count_clusters({s.eigenvalues.data(), static_cast<std::size_t>(s.eigenvalues.size())},
                                   options.cluster_gap);
  if (options.update_rank) {
    const auto k = static_cast<Eigen::Index>(*options.update_rank);
    if (k > s.eigenvalues.size()) throw ParameterError("spectrum: update rank exceeds dimension");
    Eigen::VectorXd upd = s.eigenvalues.head(k).array() - 1.0;
    s.update_cluster_count =
        count_clusters({upd.data(), static_cast<std::size_t>(upd.size())}, options.cluster_gap);
    s.update_eigenvalues = std::move(upd);
  }
  return s;
}

SpectrumReport preconditioned_spectrum(const HessianModel& m, double cluster_gap) {
  SpectrumReport s = spectrum(assemble_preconditioned(m), {cluster_gap, m.p()});
  s.model = m.descriptor();
  return s;
}

nlohmann::json to_json(const SpectrumReport& s) {
  nlohmann::json j{{"eigenvalues", vector_json(s.eigenvalues)},
                   {"kappa", s.kappa},
                   {"cluster_count", s.cluster_count},
                   {"cluster_gap", s.cluster_gap}};
  j["update_eigenvalues"] =
      s.update_eigenvalues ? vector_json(*s.update_eigenvalues) : nlohmann::json(nullptr);
  j["update_cluster_count"] = optional_json(s.update_cluster_count);
  j["model"] = s.model ? to_json(*s.model) : nlohmann::json(nullptr);
  return j;
}

}  // namespace condvar
