#include "pltf/kernels.hpp"

namespace pltf::serial {

double half_squared_error(const LatentFactors& f, const RelationalTensor& tensor, bool logistic) {
    check_compatible(f, tensor);
    double total = 0.0;
    for (const Entry& e : tensor.entries()) {
        const double s = f.U.row(e.i).cwiseProduct(f.V.row(e.j)).dot(f.R.row(e.t));
        const double m = logistic ? pltf::logistic(s) : s;
        const double r = e.value - m;
        total += r * r;
    }
    return 0.5 * total;
}

FactorGradient data_gradient(const LatentFactors& f, const RelationalTensor& tensor, bool logistic) {
    check_compatible(f, tensor);
    FactorGradient g{Matrix::Zero(f.U.rows(), f.U.cols()), Matrix::Zero(f.V.rows(), f.V.cols()),
                     Matrix::Zero(f.R.rows(), f.R.cols())};
    for (const Entry& e : tensor.entries()) {
        const auto u = f.U.row(e.i);
        const auto v = f.V.row(e.j);
        const auto r = f.R.row(e.t);
        const double s = u.cwiseProduct(v).dot(r);
        double w;
        if (logistic) {
            const double m = pltf::logistic(s);
            w = -(e.value - m) * m * (1.0 - m);
        } else {
            w = -(e.value - s);
        }
        g.dU.row(e.i) += w * v.cwiseProduct(r);
        g.dV.row(e.j) += w * u.cwiseProduct(r);
        g.dR.row(e.t) += w * u.cwiseProduct(v);
    }
    return g;
}

RowStatistics row_statistics(const LatentFactors& f, const RelationalTensor& tensor, Block block) {
    check_compatible(f, tensor);
    const Eigen::Index d = f.U.cols();
    const Eigen::Index rows = block == Block::Relation ? f.R.rows() : f.U.rows();
    RowStatistics st{std::vector<Eigen::MatrixXd>(rows, Eigen::MatrixXd::Zero(d, d)),
                     Matrix::Zero(rows, d)};
    Eigen::RowVectorXd x(d);
    for (const Entry& e : tensor.entries()) {
        Index row;
        switch (block) {
        case Block::Sender:
            x = f.V.row(e.j).cwiseProduct(f.R.row(e.t));
            row = e.i;
            break;
        case Block::Receiver:
            x = f.U.row(e.i).cwiseProduct(f.R.row(e.t));
            row = e.j;
            break;
        default:
            x = f.U.row(e.i).cwiseProduct(f.V.row(e.j));
            row = e.t;
            break;
        }
        st.gram[row] += x.transpose() * x;
        if (e.value)
            st.rhs.row(row) += x;
    }
    return st;
}

} // namespace pltf::serial
