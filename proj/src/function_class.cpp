#include "chainmean/function_class.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace chainmean {

Sample::Sample(Matrix points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw Error(ErrorCode::EmptySample, "sample has no points");
  if (!points_.allFinite()) throw Error(ErrorCode::InvalidArgument, "sample contains non-finite entries");
}

Sample Sample::rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > size()) {
    throw Error(ErrorCode::InvalidArgument, "bad row range for sample split");
  }
  return Sample(points_.middleRows(static_cast<Eigen::Index>(begin),
                                   static_cast<Eigen::Index>(end - begin)));
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    if (first == std::string::npos) return false;
    cell = cell.substr(first, last - first + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) return false;
      out.push_back(v);
    } catch (const std::exception&) {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) +
                                          ": not a row of numbers");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) +
                                          ": ragged row");
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw Error(ErrorCode::EmptySample, path.string() + " has no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Sample read_sample_csv(const std::filesystem::path& path) { return Sample(read_matrix_csv(path)); }

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

FunctionClass::FunctionClass(Kind kind, std::vector<std::string> names, Matrix directions,
                             Evaluator evaluator)
    : kind_(kind),
      names_(std::move(names)),
      directions_(std::move(directions)),
      evaluator_(std::move(evaluator)) {
  if (names_.empty()) throw Error(ErrorCode::InvalidArgument, "function class is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate function identifier '" + n + "'");
    }
  }
}

FunctionClass FunctionClass::linear(Matrix directions, std::vector<std::string> names) {
  if (directions.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no directions");
  if (!directions.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite direction");
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(directions.rows()));
    for (Eigen::Index i = 0; i < directions.rows(); ++i) names.push_back("t" + std::to_string(i));
  } else if (names.size() != static_cast<std::size_t>(directions.rows())) {
    throw Error(ErrorCode::InvalidArgument, "one name per direction required");
  }
  return FunctionClass(Kind::Linear, std::move(names), std::move(directions), nullptr);
}

FunctionClass FunctionClass::generic(std::vector<std::string> names, Evaluator evaluator) {
  if (!evaluator) throw Error(ErrorCode::InvalidArgument, "generic class needs an evaluator");
  return FunctionClass(Kind::Generic, std::move(names), Matrix(), std::move(evaluator));
}

const std::string& FunctionClass::name(FunctionId id) const {
  if (id >= names_.size()) throw Error(ErrorCode::UnknownIdentifier, "id " + std::to_string(id));
  return names_[id];
}

std::optional<FunctionId> FunctionClass::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<FunctionId>(it - names_.begin());
}

const Matrix& FunctionClass::directions() const {
  if (!is_linear()) throw Error(ErrorCode::NotLinearClass, "class has no direction set");
  return directions_;
}

double FunctionClass::evaluate(FunctionId id, std::span<const double> point) const {
  if (id >= size()) throw Error(ErrorCode::UnknownIdentifier, "id " + std::to_string(id));
  if (is_linear()) {
    if (point.size() != static_cast<std::size_t>(directions_.cols())) {
      throw Error(ErrorCode::InvalidArgument, "point dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
      acc += point[j] * directions_(static_cast<Eigen::Index>(id), static_cast<Eigen::Index>(j));
    }
    return acc;
  }
  return evaluator_(id, point);
}

Matrix FunctionClass::evaluate_on(const Sample& sample, std::span<const FunctionId> ids) const {
  for (const FunctionId id : ids) {
    if (id >= size()) throw Error(ErrorCode::UnknownIdentifier, "id " + std::to_string(id));
  }
  const auto n = static_cast<Eigen::Index>(sample.size());
  const auto m = static_cast<Eigen::Index>(ids.size());
  if (is_linear()) {
    if (sample.dim() != static_cast<std::size_t>(directions_.cols())) {
      throw Error(ErrorCode::InvalidArgument, "sample dimension does not match the class");
    }
    Matrix picked(m, directions_.cols());
    for (Eigen::Index j = 0; j < m; ++j) picked.row(j) = directions_.row(static_cast<Eigen::Index>(ids[static_cast<std::size_t>(j)]));
    return sample.points() * picked.transpose();
  }
  Matrix out(n, m);
  std::vector<double> row(sample.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = sample.points()(i, static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = evaluator_(ids[static_cast<std::size_t>(j)], row);
  }
  return out;
}

void FunctionClass::declare_constants(double kappa, double norm_equivalence) {
  if (!(kappa >= 1.0) || !(norm_equivalence >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "declared kappa and L must be >= 1");
  }
  kappa_ = kappa;
  norm_equivalence_ = norm_equivalence;
}

TransformPair TransformPair::abs_power(double p) {
  if (!(p >= 2.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::InvalidArgument, "AbsPower needs p >= 2");
  }
  return TransformPair(Kind::AbsPower, p, nullptr, nullptr);
}

TransformPair TransformPair::custom(Fn u, Fn v) {
  if (!u || !v) throw Error(ErrorCode::InvalidArgument, "custom transform needs u and v");
  return TransformPair(Kind::Custom, 0.0, std::move(u), std::move(v));
}

void TransformPair::apply_u(Eigen::Ref<Matrix> values) const {
  switch (kind_) {
    case Kind::Square:
      values = values.array().square().matrix();
      return;
    case Kind::AbsPower:
      values = values.array().abs().pow(p_).matrix();
      return;
    case Kind::Identity:
      return;
    case Kind::Custom:
      values = values.unaryExpr([this](double t) { return u_(t); }).eval();
      return;
  }
}

Matrix psd_sqrt(const Matrix& covariance, double tolerance) {
  if (covariance.rows() != covariance.cols()) {
    throw Error(ErrorCode::NotSquare, "covariance must be square");
  }
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -tolerance * scale) {
      throw Error(ErrorCode::NotPSD, "eigenvalue " + std::to_string(values(i)) + " is negative");
    }
    values(i) = std::sqrt(std::max(0.0, values(i)));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

DistanceOracle DistanceOracle::exact_l2(const FunctionClass& cls, const Matrix& covariance) {
  if (!cls.is_linear()) {
    throw Error(ErrorCode::NotLinearClass, "ExactL2 needs a Linear class");
  }
  const Matrix& t = cls.directions();
  if (covariance.rows() != t.cols() || covariance.cols() != t.cols()) {
    throw Error(ErrorCode::NotSquare, "covariance must be d x d");
  }
  DistanceOracle oracle(Kind::ExactL2, cls.size());
  oracle.embedding_ = std::make_shared<const Matrix>(t * psd_sqrt(covariance));
  return oracle;
}

DistanceOracle DistanceOracle::empirical(const FunctionClass& cls, const Sample& auxiliary) {
  DistanceOracle oracle(Kind::Empirical, cls.size());
  if (cls.is_linear()) {
    const Matrix& x = auxiliary.points();
    const Matrix second_moment = (x.transpose() * x) / static_cast<double>(x.rows());
    oracle.embedding_ = std::make_shared<const Matrix>(cls.directions() * psd_sqrt(second_moment, 1e-8));
  } else {
    std::vector<FunctionId> ids(cls.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    const double scale = 1.0 / std::sqrt(static_cast<double>(auxiliary.size()));
    oracle.embedding_ = std::make_shared<const Matrix>((cls.evaluate_on(auxiliary, ids) * scale).transpose());
  }
  return oracle;
}

DistanceOracle DistanceOracle::user_provided(std::size_t class_size, Callback callback) {
  if (!callback) throw Error(ErrorCode::InvalidArgument, "user distance oracle needs a callback");
  DistanceOracle oracle(Kind::UserProvided, class_size);
  oracle.callback_ = std::move(callback);
  return oracle;
}

double DistanceOracle::compute(FunctionId f, FunctionId h) const {
  if (f == h) return 0.0;
  if (kind_ == Kind::UserProvided) return callback_(f, h);
  const Matrix& e = *embedding_;
  if (f == kZeroFunction) return e.row(static_cast<Eigen::Index>(h)).norm();
  if (h == kZeroFunction) return e.row(static_cast<Eigen::Index>(f)).norm();
  return (e.row(static_cast<Eigen::Index>(f)) - e.row(static_cast<Eigen::Index>(h))).norm();
}

double DistanceOracle::operator()(FunctionId f, FunctionId h) const {
  for (const FunctionId id : {f, h}) {
    if (id != kZeroFunction && id >= class_size_) {
      throw Error(ErrorCode::UnknownIdentifier, "id " + std::to_string(id));
    }
  }
  const double d = compute(f, h);
  assert(d >= 0.0 && "distance oracle returned a negative value");
  assert(d == compute(h, f) && "distance oracle is not symmetric");
  return d;
}

double rho(const DistanceOracle& oracle, FunctionId f, FunctionId h) { return oracle(f, h); }

double estimate_RF(const FunctionClass& cls, const TransformPair& u, const Sample& sample) {
  double best = 0.0;
  std::vector<FunctionId> one(1);
  for (FunctionId f = 0; f < cls.size(); ++f) {
    one[0] = f;
    const Matrix col = cls.evaluate_on(sample, one);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < col.rows(); ++i) {
      const double v = u.v(2.0 * std::abs(col(i, 0)));
      acc += (v * v) * (v * v);
    }
    best = std::max(best, std::pow(acc / static_cast<double>(col.rows()), 0.25));
  }
  return best;
}

double d_F(const FunctionClass& cls, const DistanceOracle& oracle) {
  double best = 0.0;
  for (FunctionId f = 0; f < cls.size(); ++f) best = std::max(best, oracle(f, kZeroFunction));
  return best;
}

}  // namespace chainmean
