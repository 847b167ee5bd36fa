#include "ssdlasso/design.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssdlasso/errors.hpp"

namespace ssdlasso {

long binomial(int n, int k) noexcept {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

Design::Design(IntMatrix x) : x_(std::move(x)) {
    require(x_.rows() >= 2, ErrorKind::InvalidArgument, "a design needs at least 2 runs");
    require(x_.cols() >= 1, ErrorKind::InvalidArgument, "a design needs at least 1 factor");
    require((x_.array().abs() == 1).all(), ErrorKind::InvalidArgument, "design entries must be +1 or -1");
}

Design Design::with_column_signs(std::span<const int> signs) const {
    require(static_cast<int>(signs.size()) == factors(), ErrorKind::DimensionMismatch, "one sign per factor");
    IntMatrix y = x_;
    for (int j = 0; j < factors(); ++j) {
        require(signs[j] == 1 || signs[j] == -1, ErrorKind::InvalidArgument, "signs must be +1 or -1");
        y.col(j) *= signs[j];
    }
    return Design(std::move(y));
}

Design Design::with_columns(std::span<const int> order) const {
    IntMatrix y(x_.rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t j = 0; j < order.size(); ++j) {
        require(order[j] >= 0 && order[j] < factors(), ErrorKind::InvalidArgument, "column index out of range");
        y.col(static_cast<Eigen::Index>(j)) = x_.col(order[j]);
    }
    return Design(std::move(y));
}

Design Design::parse_csv(std::string_view text) {
    std::vector<std::vector<int>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<int> row;
        std::size_t start = 0;
        for (;;) {
            auto comma = line.find(',', start);
            std::string tok = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (tok == "1") row.push_back(1);
            else if (tok == "-1") row.push_back(-1);
            else fail(ErrorKind::Parse, "line " + std::to_string(lineno) + ": unexpected token '" + tok + "'");
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            fail(ErrorKind::Parse, "line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::Parse, "design file is empty");
    IntMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    try {
        return Design(std::move(x));
    } catch (const Error& e) {
        fail(ErrorKind::Parse, e.what());
    }
}

Design Design::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string Design::to_csv() const {
    std::string out;
    for (int i = 0; i < runs(); ++i) {
        for (int j = 0; j < factors(); ++j) {
            if (j) out += ',';
            out += x_(i, j) > 0 ? "1" : "-1";
        }
        out += '\n';
    }
    return out;
}

void Design::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << to_csv();
}

bool StandardizedDesign::is_degenerate(int j) const noexcept {
    return std::binary_search(degenerate_columns.begin(), degenerate_columns.end(), j);
}

StandardizedDesign standardize(const Design& design) {
    const int n = design.runs(), p = design.factors();
    StandardizedDesign s;
    s.n = n;
    s.F = Eigen::MatrixXd::Zero(n, p);
    s.V = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd col = design.matrix().col(j).cast<double>();
        col.array() -= col.mean();
        double v = col.squaredNorm() / n;
        if (col.cwiseAbs().maxCoeff() == 0.0) {
            s.degenerate_columns.push_back(j);
            continue;
        }
        s.V[j] = v;
        s.F.col(j) = col / std::sqrt(v);
    }
    s.C = s.F.transpose() * s.F / static_cast<double>(n);
    for (int j = 0; j < p; ++j)
        if (!s.is_degenerate(j)) s.C(j, j) = 1.0;
    return s;
}

HeuristicSummary heuristics(const Design& design) {
    const int n = design.runs(), p = design.factors();
    IntMatrix L(n, p + 1);
    L.col(0).setOnes();
    L.rightCols(p) = design.matrix();
    IntMatrix S = L.transpose() * L;
    HeuristicSummary h;
    double sum_bal = 0.0;
    for (int i = 0; i <= p; ++i)
        for (int j = i + 1; j <= p; ++j) {
            double s = S(i, j);
            h.sum_s += s;
            h.sum_s2 += s * s;
            if (i >= 1) sum_bal += s * s;
        }
    h.pairs = binomial(p + 1, 2);
    h.ue_s2 = h.sum_s2 / static_cast<double>(h.pairs);
    h.ue_s = h.sum_s / static_cast<double>(h.pairs);
    h.var_s = std::max(0.0, h.ue_s2 - h.ue_s * h.ue_s);
    bool balanced = true;
    for (int j = 1; j <= p; ++j) balanced = balanced && S(0, j) == 0;
    if (balanced) h.e_s2 = p >= 2 ? sum_bal / static_cast<double>(binomial(p, 2)) : 0.0;
    return h;
}

double ue2_efficiency(const HeuristicSummary& h, double reference) {
    require(reference >= 0.0, ErrorKind::InvalidArgument, "reference must be nonnegative");
    if (h.ue_s2 == 0.0) {
        if (reference == 0.0) return 1.0;
        fail(ErrorKind::ZeroUe2, "design has zero UE(s^2)");
    }
    return reference / h.ue_s2;
}

double ue2_efficiency(const Design& design, double reference) { return ue2_efficiency(heuristics(design), reference); }

SupportBlocks submatrix_views(const StandardizedDesign& sd, std::span<const int> support) {
    const int p = sd.factors();
    SupportBlocks b;
    b.active.assign(support.begin(), support.end());
    std::vector<char> in_a(p, 0);
    for (int j : b.active) {
        require(j >= 0 && j < p, ErrorKind::InvalidArgument, "support index out of range");
        require(!in_a[j], ErrorKind::InvalidArgument, "support has a repeated index");
        require(!sd.is_degenerate(j), ErrorKind::DegenerateSupport, "support touches a constant column");
        in_a[j] = 1;
    }
    for (int j = 0; j < p; ++j)
        if (!in_a[j] && !sd.is_degenerate(j)) b.inactive.push_back(j);
    const auto k = static_cast<Eigen::Index>(b.active.size());
    const auto q = static_cast<Eigen::Index>(b.inactive.size());
    b.C_A.resize(k, k);
    b.C_IA.resize(q, k);
    b.C_I.resize(q, q);
    b.V_A.resize(k);
    b.F_A.resize(sd.n, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        b.V_A[a] = sd.V[b.active[a]];
        b.F_A.col(a) = sd.F.col(b.active[a]);
        for (Eigen::Index c = 0; c < k; ++c) b.C_A(a, c) = sd.C(b.active[a], b.active[c]);
        for (Eigen::Index i = 0; i < q; ++i) b.C_IA(i, a) = sd.C(b.inactive[i], b.active[a]);
    }
    for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j < q; ++j) b.C_I(i, j) = sd.C(b.inactive[i], b.inactive[j]);
    if (k > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.C_A);
        double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        require(lo > 0.0 && hi / lo <= 1e12, ErrorKind::SingularCA, "active correlation block is singular");
        b.C_A_inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
        b.C_A_inv = 0.5 * (b.C_A_inv + b.C_A_inv.transpose());
    }
    return b;
}

}  // namespace ssdlasso
