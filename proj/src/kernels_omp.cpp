#include "pltf/kernels.hpp"

#include <omp.h>

namespace pltf::parallel {
namespace {

constexpr std::ptrdiff_t kChunk = 2048;

const EntryGrouping& grouping_for(const RelationalTensor& tensor, Block block) {
    switch (block) {
    case Block::Sender:
        return tensor.by_sender();
    case Block::Receiver:
        return tensor.by_receiver();
    default:
        return tensor.by_relation();
    }
}

} // namespace

double half_squared_error(const LatentFactors& f, const RelationalTensor& tensor, bool logistic) {
    check_compatible(f, tensor);
    const auto entries = tensor.entries();
    const auto n = static_cast<std::ptrdiff_t>(entries.size());
    const std::ptrdiff_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < chunks; ++c) {
        const std::ptrdiff_t end = std::min(n, (c + 1) * kChunk);
        double acc = 0.0;
        for (std::ptrdiff_t p = c * kChunk; p < end; ++p) {
            const Entry& e = entries[p];
            const double s = f.U.row(e.i).cwiseProduct(f.V.row(e.j)).dot(f.R.row(e.t));
            const double m = logistic ? pltf::logistic(s) : s;
            const double r = e.value - m;
            acc += r * r;
        }
        partial[c] = acc;
    }

    double total = 0.0;
    for (double v : partial)
        total += v;
    return 0.5 * total;
}

FactorGradient data_gradient(const LatentFactors& f, const RelationalTensor& tensor, bool logistic) {
    check_compatible(f, tensor);
    const auto entries = tensor.entries();
    const auto n = static_cast<std::ptrdiff_t>(entries.size());

    // d(1/2 r^2)/ds per entry, shared by the three row passes below.
    std::vector<double> weight(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        const Entry& e = entries[p];
        const double s = f.U.row(e.i).cwiseProduct(f.V.row(e.j)).dot(f.R.row(e.t));
        if (logistic) {
            const double m = pltf::logistic(s);
            weight[p] = -(e.value - m) * m * (1.0 - m);
        } else {
            weight[p] = -(e.value - s);
        }
    }

    FactorGradient g{Matrix::Zero(f.U.rows(), f.U.cols()), Matrix::Zero(f.V.rows(), f.V.cols()),
                     Matrix::Zero(f.R.rows(), f.R.cols())};

    const EntryGrouping& senders = tensor.by_sender();
    const EntryGrouping& receivers = tensor.by_receiver();
    const EntryGrouping& relations = tensor.by_relation();

#pragma omp parallel
    {
#pragma omp for schedule(dynamic, 16) nowait
        for (Eigen::Index i = 0; i < f.U.rows(); ++i)
            for (std::uint32_t p : senders.group(i)) {
                const Entry& e = entries[p];
                g.dU.row(i) += weight[p] * f.V.row(e.j).cwiseProduct(f.R.row(e.t));
            }
#pragma omp for schedule(dynamic, 16) nowait
        for (Eigen::Index j = 0; j < f.V.rows(); ++j)
            for (std::uint32_t p : receivers.group(j)) {
                const Entry& e = entries[p];
                g.dV.row(j) += weight[p] * f.U.row(e.i).cwiseProduct(f.R.row(e.t));
            }
#pragma omp for schedule(dynamic, 1) nowait
        for (Eigen::Index t = 0; t < f.R.rows(); ++t)
            for (std::uint32_t p : relations.group(t)) {
                const Entry& e = entries[p];
                g.dR.row(t) += weight[p] * f.U.row(e.i).cwiseProduct(f.V.row(e.j));
            }
    }
    return g;
}

RowStatistics row_statistics(const LatentFactors& f, const RelationalTensor& tensor, Block block) {
    check_compatible(f, tensor);
    const auto entries = tensor.entries();
    const EntryGrouping& groups = grouping_for(tensor, block);
    const Eigen::Index d = f.U.cols();
    const Eigen::Index rows = block == Block::Relation ? f.R.rows() : f.U.rows();
    RowStatistics st{std::vector<Eigen::MatrixXd>(rows, Eigen::MatrixXd::Zero(d, d)),
                     Matrix::Zero(rows, d)};

#pragma omp parallel
    {
        Eigen::RowVectorXd x(d);
#pragma omp for schedule(dynamic, 8)
        for (Eigen::Index r = 0; r < rows; ++r) {
            Eigen::MatrixXd& gram = st.gram[r];
            for (std::uint32_t p : groups.group(r)) {
                const Entry& e = entries[p];
                switch (block) {
                case Block::Sender:
                    x = f.V.row(e.j).cwiseProduct(f.R.row(e.t));
                    break;
                case Block::Receiver:
                    x = f.U.row(e.i).cwiseProduct(f.R.row(e.t));
                    break;
                default:
                    x = f.U.row(e.i).cwiseProduct(f.V.row(e.j));
                    break;
                }
                gram.noalias() += x.transpose() * x;
                if (e.value)
                    st.rhs.row(r) += x;
            }
        }
    }
    return st;
}

} // namespace pltf::parallel
