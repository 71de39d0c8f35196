#include "kcf/kernel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kcf/errors.hpp"

namespace kcf {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      throw InvalidInput(fmt::format("non-finite entry in {}", what));
    }
  }
}

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size() || a.empty()) {
    throw InvalidInput(fmt::format("dimension mismatch in {} ({} vs {})", what, a.size(), b.size()));
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Shared scalar pieces of k = A * E. Every quantity is symmetric in (x, xp)
// bit-for-bit: the two norms are added before scaling, and |r|^2 does not
// depend on the sign of r.
struct Pieces {
  double a;        // A = 1 / (1 + a1 |x|^2 + a1 |x'|^2)
  double e;        // E = exp(-|r|^2 / (2 l^2))
  double r2;       // |x - x'|^2
  double xx;       // x · x'
  double inv_l2;   // 1 / a2^2
};

Pieces pieces(std::span<const double> x, std::span<const double> xp, const SteinKernelParams& p) {
  double nx = 0.0;
  double nxp = 0.0;
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nx += x[i] * x[i];
    nxp += xp[i] * xp[i];
    const double r = x[i] - xp[i];
    r2 += r * r;
  }
  const double inv_l2 = 1.0 / (p.alpha2 * p.alpha2);
  return {1.0 / (1.0 + p.alpha1 * (nx + nxp)), std::exp(-0.5 * r2 * inv_l2), r2, dot(x, xp),
          inv_l2};
}

// ∇_x k(x, xp) written into out. ∇_x' k(x, xp) is this with arguments swapped.
void grad_first(std::span<const double> x, std::span<const double> xp, const Pieces& q,
                double alpha1, std::span<double> out) noexcept {
  const double ca = -2.0 * alpha1 * q.a * q.a;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = q.e * (ca * x[i] - q.a * (x[i] - xp[i]) * q.inv_l2);
  }
}

double div_grad(const Pieces& q, std::size_t d, double alpha1) noexcept {
  const double dd = static_cast<double>(d);
  return q.a * q.e *
         (dd * q.inv_l2 - q.r2 * q.inv_l2 * q.inv_l2 + 8.0 * alpha1 * alpha1 * q.a * q.a * q.xx -
          2.0 * alpha1 * q.a * q.r2 * q.inv_l2);
}

double stein_kernel_unchecked(std::span<const double> x, std::span<const double> u_x,
                              std::span<const double> xp, std::span<const double> u_xp,
                              const SteinKernelParams& params) {
  constexpr std::size_t kStack = 16;
  const std::size_t d = x.size();
  double gx_buf[kStack];
  double gxp_buf[kStack];
  Eigen::VectorXd heap_gx;
  Eigen::VectorXd heap_gxp;
  std::span<double> gx(gx_buf, d <= kStack ? d : 0);
  std::span<double> gxp(gxp_buf, d <= kStack ? d : 0);
  if (d > kStack) {
    heap_gx.resize(static_cast<Eigen::Index>(d));
    heap_gxp.resize(static_cast<Eigen::Index>(d));
    gx = {heap_gx.data(), d};
    gxp = {heap_gxp.data(), d};
  }

  const Pieces q = pieces(x, xp, params);
  grad_first(x, xp, q, params.alpha1, gx);
  grad_first(xp, x, q, params.alpha1, gxp);
  const double k = q.a * q.e;
  // The two cross terms swap places under (x,u) <-> (xp,u'); a + b == b + a.
  const double cross = dot(u_x, gxp) + dot(u_xp, gx);
  return div_grad(q, d, params.alpha1) + cross + dot(u_x, u_xp) * k;
}

}  // namespace

void SteinKernelParams::validate() const {
  if (!(std::isfinite(alpha1) && alpha1 > 0.0) || !(std::isfinite(alpha2) && alpha2 > 0.0)) {
    throw InvalidInput(
        fmt::format("kernel parameters must be positive (alpha1={}, alpha2={})", alpha1, alpha2));
  }
}

double base_kernel(std::span<const double> x, std::span<const double> xp,
                   const SteinKernelParams& params) {
  params.validate();
  require_same_dim(x, xp, "base_kernel");
  require_finite(x, "x");
  require_finite(xp, "x'");
  const Pieces q = pieces(x, xp, params);
  return q.a * q.e;
}

KernelDerivatives base_kernel_derivatives(std::span<const double> x, std::span<const double> xp,
                                          const SteinKernelParams& params) {
  params.validate();
  require_same_dim(x, xp, "base_kernel_derivatives");
  require_finite(x, "x");
  require_finite(xp, "x'");
  const Pieces q = pieces(x, xp, params);
  KernelDerivatives out;
  out.k_value = q.a * q.e;
  out.grad_x.resize(static_cast<Eigen::Index>(x.size()));
  out.grad_xp.resize(static_cast<Eigen::Index>(x.size()));
  grad_first(x, xp, q, params.alpha1, {out.grad_x.data(), x.size()});
  grad_first(xp, x, q, params.alpha1, {out.grad_xp.data(), x.size()});
  out.div_grad = div_grad(q, x.size(), params.alpha1);
  return out;
}

double stein_kernel(std::span<const double> x, std::span<const double> u_x,
                    std::span<const double> xp, std::span<const double> u_xp,
                    const SteinKernelParams& params) {
  params.validate();
  require_same_dim(x, xp, "stein_kernel");
  require_same_dim(x, u_x, "stein_kernel score");
  require_same_dim(xp, u_xp, "stein_kernel score");
  require_finite(x, "x");
  require_finite(xp, "x'");
  require_finite(u_x, "u(x)");
  require_finite(u_xp, "u(x')");
  return stein_kernel_unchecked(x, u_x, xp, u_xp, params);
}

Eigen::MatrixXd stein_gram(const ScoredDataset& data, const SteinKernelParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (Eigen::Index j = i; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double v =
          stein_kernel_unchecked(data.point(ui), data.score(ui), data.point(uj), data.score(uj), params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd stein_cross(const ScoredDataset& rows, const ScoredDataset& cols,
                            const SteinKernelParams& params) {
  params.validate();
  if (!rows.empty() && !cols.empty() && rows.dim() != cols.dim()) {
    throw InvalidInput(fmt::format("datasets have dimensions {} and {}", rows.dim(), cols.dim()));
  }
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd k(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      k(i, j) =
          stein_kernel_unchecked(rows.point(ui), rows.score(ui), cols.point(uj), cols.score(uj), params);
    }
  }
  return k;
}

SteinMatrixBundle assemble_matrices(const ScoredDataset& d0, const ScoredDataset& d1,
                                    const SteinKernelParams& params) {
  if (d0.empty()) {
    throw InvalidInput("D0 must contain at least one sample");
  }
  if (!d1.empty() && d0.dim() != d1.dim()) {
    throw InvalidInput(fmt::format("D0 has dimension {} but D1 has {}", d0.dim(), d1.dim()));
  }
  return {stein_gram(d0, params), stein_cross(d1, d0, params), stein_gram(d1, params)};
}

}  // namespace kcf
