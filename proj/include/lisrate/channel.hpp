#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"

namespace lisrate {

// Per-path elevation/azimuth with the derived antenna gain sqrt(cos cos).
struct PathSet {
    std::vector<double> elevation;
    std::vector<double> azimuth;
    std::vector<double> gain;

    int size() const { return static_cast<int>(gain.size()); }
};

inline PathSet make_path_set(std::vector<double> elevation, std::vector<double> azimuth) {
    if (elevation.size() != azimuth.size()) throw std::invalid_argument("path angle lists differ in length");
    PathSet ps;
    ps.gain.resize(elevation.size());
    for (std::size_t p = 0; p < elevation.size(); ++p) {
        double c = std::cos(elevation[p]) * std::cos(azimuth[p]);
        ps.gain[p] = std::sqrt(std::max(c, 0.0));
    }
    ps.elevation = std::move(elevation);
    ps.azimuth = std::move(azimuth);
    return ps;
}

// i.i.d. uniform angles on (-pi/2, pi/2)
inline PathSet draw_path_set(int P, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-0.5 * kPi, 0.5 * kPi);
    std::vector<double> el(static_cast<std::size_t>(P));
    std::vector<double> az(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
        el[p] = u(gen);
        az[p] = u(gen);
    }
    return make_path_set(std::move(el), std::move(az));
}

inline CVector los_channel(const Device& dev, const AntennaGrid& grid) {
    CVector h(grid.num_antennas);
    const double k0 = 2.0 * kPi / grid.wavelength;
    for (int m = 0; m < grid.num_antennas; ++m) {
        const Vec3& a = grid.antenna_positions[m];
        double d = distance(dev.position, a);
        h[m] = los_gain(dev, a) * std::polar(1.0, -k0 * d);
    }
    return h;
}

// phase ramp exp(j * step * phi * n), n = 0..len-1
inline CVector phase_ramp(int len, double step, double phi) {
    CVector v(len);
    for (int n = 0; n < len; ++n) v[n] = std::polar(1.0, step * phi * n);
    return v;
}

inline CVector upa_steering(double theta_v, double theta_h, int M, double spacing, double lambda) {
    long long side = 0;
    if (!is_perfect_square(M, &side)) throw std::invalid_argument("UPA needs a perfect-square antenna count");
    const int n = static_cast<int>(side);
    const double step = 2.0 * kPi * spacing / lambda;
    CVector dv = phase_ramp(n, step, std::sin(theta_v));
    CVector dh = phase_ramp(n, step, std::sin(theta_h) * std::cos(theta_h));
    CVector d(M);
    const double s = 1.0 / std::sqrt(static_cast<double>(M));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[i * n + j] = s * dv[i] * dh[j];
    return d;
}

inline CVector ula_steering(double theta, int M, double spacing, double lambda) {
    if (M < 1) throw std::invalid_argument("ULA needs at least one antenna");
    CVector d = phase_ramp(M, 2.0 * kPi * spacing / lambda, std::sin(theta));
    return d / std::sqrt(static_cast<double>(M));
}

// R^{1/2} = diag(l) [alpha_1 d_1, ..., alpha_P d_P]. UPA factors are kept in
// Kronecker form (two side x P ramp matrices), which is what makes M in the
// thousands affordable; a dense M x P matrix is used for the ULA baseline.
class CorrelationFactor {
public:
    enum class Kind { empty, kronecker, dense };

    int source = -1;  // transmitting device j
    int target = -1;  // serving unit k

    CorrelationFactor() = default;

    static CorrelationFactor none(int M) {
        CorrelationFactor c;
        c.kind_ = Kind::empty;
        c.rows_ = M;
        c.cols_ = 0;
        return c;
    }

    static CorrelationFactor upa(const RVector& path_loss, const PathSet& paths, int side, double spacing,
                                 double lambda) {
        const int M = side * side;
        if (path_loss.size() != M) throw std::invalid_argument("path loss vector has wrong length");
        CorrelationFactor c;
        c.kind_ = Kind::kronecker;
        c.rows_ = M;
        c.cols_ = paths.size();
        c.side_ = side;
        c.loss_ = path_loss;
        c.gain_ = RVector::Map(paths.gain.data(), paths.size());
        c.dv_.resize(side, c.cols_);
        c.dh_.resize(side, c.cols_);
        const double step = 2.0 * kPi * spacing / lambda;
        for (int p = 0; p < c.cols_; ++p) {
            c.dv_.col(p) = phase_ramp(side, step, std::sin(paths.elevation[p]));
            c.dh_.col(p) = phase_ramp(side, step, std::sin(paths.azimuth[p]) * std::cos(paths.azimuth[p]));
        }
        c.dh_adj_ = c.dh_.adjoint();
        c.dv_adj_ = c.dv_.adjoint();
        return c;
    }

    static CorrelationFactor dense(CMatrix R) {
        CorrelationFactor c;
        c.kind_ = Kind::dense;
        c.rows_ = static_cast<int>(R.rows());
        c.cols_ = static_cast<int>(R.cols());
        c.dense_ = std::move(R);
        return c;
    }

    Kind kind() const { return kind_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    CMatrix to_dense() const {
        switch (kind_) {
            case Kind::empty: return CMatrix::Zero(rows_, 0);
            case Kind::dense: return dense_;
            case Kind::kronecker: break;
        }
        CMatrix R(rows_, cols_);
        const double s = 1.0 / std::sqrt(static_cast<double>(rows_));
        for (int p = 0; p < cols_; ++p)
            for (int i = 0; i < side_; ++i)
                for (int j = 0; j < side_; ++j) {
                    int m = i * side_ + j;
                    R(m, p) = loss_[m] * gain_[p] * s * dv_(i, p) * dh_(j, p);
                }
        return R;
    }

    // R g
    CVector apply(const CVector& g) const {
        if (g.size() != cols_) throw std::invalid_argument("fading vector has wrong length");
        switch (kind_) {
            case Kind::empty: return CVector::Zero(rows_);
            case Kind::dense: return dense_ * g;
            case Kind::kronecker: break;
        }
        CVector ag = gain_.cast<Complex>().cwiseProduct(g);
        // Gt(j, i) = sum_p dh_j(p) ag_p dv_i(p); column-major flatten gives m = i*side + j
        CMatrix Gt = dh_ * ag.asDiagonal() * dv_.transpose();
        CVector out = Eigen::Map<const CVector>(Gt.data(), rows_);
        return out.cwiseProduct(loss_.cast<Complex>()) / std::sqrt(static_cast<double>(rows_));
    }

    // R^H W for a batch of columns; returns P x B
    CMatrix adjoint_apply(const CMatrix& W) const {
        if (W.rows() != rows_) throw std::invalid_argument("combiner batch has wrong length");
        const Eigen::Index B = W.cols();
        switch (kind_) {
            case Kind::empty: return CMatrix::Zero(0, B);
            case Kind::dense: return dense_.adjoint() * W;
            case Kind::kronecker: break;
        }
        CMatrix U = loss_.cast<Complex>().asDiagonal() * W;
        // each M-column is an side x side block with Ut(j, i) = u[i*side + j]
        Eigen::Map<const CMatrix> Ubig(U.data(), side_, side_ * B);
        CMatrix T = dh_adj_ * Ubig;  // P x (side * B)
        CMatrix out(cols_, B);
        const double s = 1.0 / std::sqrt(static_cast<double>(rows_));
        for (Eigen::Index b = 0; b < B; ++b) {
            auto blk = T.middleCols(b * side_, side_);
            out.col(b) = blk.cwiseProduct(dv_adj_).rowwise().sum();
        }
        return gain_.cast<Complex>().asDiagonal() * out * s;
    }

    CVector adjoint_apply(const CVector& w) const {
        CMatrix W = w;
        return adjoint_apply(W).col(0);
    }

    // sum_p |R_mp|^2 for each antenna m
    RVector row_power() const {
        switch (kind_) {
            case Kind::empty: return RVector::Zero(rows_);
            case Kind::dense: return dense_.rowwise().squaredNorm();
            case Kind::kronecker: break;
        }
        return loss_.array().square() * (gain_.squaredNorm() / rows_);
    }

    // sum_m |R_mp|^2 for each path p
    RVector column_power() const {
        switch (kind_) {
            case Kind::empty: return RVector::Zero(0);
            case Kind::dense: return dense_.colwise().squaredNorm().transpose();
            case Kind::kronecker: break;
        }
        return gain_.array().square() * (loss_.squaredNorm() / rows_);
    }

    double frobenius_sq() const { return row_power().sum(); }

    const RVector& path_loss() const { return loss_; }
    const RVector& path_gain() const { return gain_; }

private:
    Kind kind_ = Kind::empty;
    int rows_ = 0;
    int cols_ = 0;
    int side_ = 0;
    RVector loss_;
    RVector gain_;
    CMatrix dv_, dh_;
    CMatrix dv_adj_, dh_adj_;
    CMatrix dense_;
};

// NLOS path loss d^{-beta_PL/2} per antenna, distances clamped at min_distance
inline RVector nlos_path_loss(const Device& dev, const AntennaGrid& grid, double beta_pl, double min_distance = 1.0) {
    RVector l(grid.num_antennas);
    for (int m = 0; m < grid.num_antennas; ++m) {
        double d = distance(dev.position, grid.antenna_positions[m]);
        if (d <= 0.0) throw std::invalid_argument("zero device-antenna distance");
        l[m] = std::pow(std::max(d, min_distance), -0.5 * beta_pl);
    }
    return l;
}

inline CorrelationFactor correlation_factor(const Device& dev, const AntennaGrid& grid, const PathSet& paths,
                                            double beta_pl, double min_distance = 1.0) {
    CorrelationFactor c = CorrelationFactor::upa(nlos_path_loss(dev, grid, beta_pl, min_distance), paths, grid.side,
                                                 grid.spacing, grid.wavelength);
    c.source = dev.index;
    return c;
}

struct RicianLink {
    double kappa = 0.0;
    CVector h_los;
    CorrelationFactor R;

    double los_weight() const { return std::isinf(kappa) ? 1.0 : std::sqrt(kappa / (kappa + 1.0)); }
    double nlos_weight() const { return std::isinf(kappa) ? 0.0 : std::sqrt(1.0 / (kappa + 1.0)); }
};

inline CVector rician_channel(const RicianLink& link, const CVector& g) {
    if (link.kappa < 0.0) throw std::invalid_argument("negative Rician factor");
    if (link.h_los.size() != link.R.rows()) throw std::invalid_argument("LOS vector and correlation factor disagree");
    CVector h = link.nlos_weight() * link.R.apply(g);
    if (link.kappa > 0.0) h += link.los_weight() * link.h_los;
    return h;
}

}  // namespace lisrate
