#include "quasivar/minres.hpp"

#include <cmath>
#include <limits>

namespace quasivar {

MinresResult minres(const LinearOperator& A, const Eigen::VectorXd& b, double rtol, int max_iter) {
  const Eigen::Index n = b.size();
  MinresResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double beta1 = b.norm();
  if (beta1 == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::VectorXd r1 = b, r2 = b, y = b;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n), w1 = w, w2 = w;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
  double phibar = beta1, cs = -1.0, sn = 0.0;
  const double tiny = std::numeric_limits<double>::epsilon();

  for (int itn = 1; itn <= max_iter; ++itn) {
    const Eigen::VectorXd v = y / beta;
    y = A(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = y.norm();

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    out.x += phi * w;
    out.iterations = itn;
    out.residual = phibar;
    if (phibar <= rtol * beta1 || beta <= tiny * beta1) {
      out.converged = phibar <= rtol * beta1;
      // A Krylov space that closes early still gives the exact solution.
      if (beta <= tiny * beta1) out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace quasivar
