#include "isokam/liegroup.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace isokam {

bool is_special_orthogonal(const Mat& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  const Mat err = m.transpose() * m - Mat::Identity(m.rows(), m.cols());
  return err.norm() <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

GroupElement::GroupElement(Mat m) : mat_(std::move(m)) {
  if (!is_special_orthogonal(mat_))
    throw SingularInput("matrix is not special orthogonal within 1e-10");
}

GroupElement GroupElement::unchecked(Mat m) {
  GroupElement g;
  g.mat_ = std::move(m);
  return g;
}

GroupElement GroupElement::identity(int dim) { return unchecked(Mat::Identity(dim, dim)); }

GroupElement GroupElement::operator*(const GroupElement& other) const {
  return unchecked(mat_ * other.mat_);
}

GroupElement GroupElement::inverse() const { return unchecked(mat_.transpose()); }

GeneratorTuple::GeneratorTuple(std::vector<GroupElement> elems) : elems_(std::move(elems)) {
  if (elems_.empty()) throw ConfigInvalid("generators", "tuple must be non-empty");
  for (const auto& g : elems_)
    if (g.dim() != elems_.front().dim())
      throw ConfigInvalid("generators", "generators must share one dimension");
}

GroupElement project_to_group(const Mat& a) {
  if (a.rows() != a.cols()) throw SingularInput("matrix is not square");
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  if (s(s.size() - 1) < 1e-12) throw SingularInput("smallest singular value below 1e-12");
  Mat u = svd.matrixU();
  Mat v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) v.col(v.cols() - 1) *= -1.0;
  return GroupElement::unchecked(u * v.transpose());
}

Mat hat(const Eigen::Vector3d& w) {
  Mat x(3, 3);
  x << 0.0, -w(2), w(1), w(2), 0.0, -w(0), -w(1), w(0), 0.0;
  return x;
}

Eigen::Vector3d vee(const Mat& x) {
  return Eigen::Vector3d(x(2, 1) - x(1, 2), x(0, 2) - x(2, 0), x(1, 0) - x(0, 1)) * 0.5;
}

double rotation_angle(const Mat& r) {
  // vee((R - R^T)/2) has norm sin(theta); cos from the trace.
  const double sin_t = vee(r).norm();
  const double cos_t = 0.5 * (r.trace() - 1.0);
  return std::atan2(sin_t, cos_t);
}

namespace {

Mat log_so3(const Mat& r) {
  const double theta = rotation_angle(r);
  if (std::numbers::pi - theta < kAntipodalTol)
    throw LogUndefined("rotation angle within 1e-9 of pi");
  const Mat skew = 0.5 * (r - r.transpose());
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return skew * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (theta < std::numbers::pi - 1e-3) return skew * (theta / std::sin(theta));
  // Near pi: axis from the symmetric part, sign from the skew part.
  const double c = std::cos(theta);
  const Mat nn = (0.5 * (r + r.transpose()) - c * Mat::Identity(3, 3)) / (1.0 - c);
  int k = 0;
  nn.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = nn.col(k) / std::sqrt(nn(k, k));
  if (axis.dot(vee(skew)) < 0.0) axis = -axis;
  return hat(axis.normalized() * theta);
}

Mat log_general(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::RealSchur<Mat> schur(a);
  const Mat& t = schur.matrixT();
  const Mat& u = schur.matrixU();
  Mat blocks = Mat::Zero(n, n);
  int i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 0.0) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
      const double theta = std::atan2(s, c);
      if (std::numbers::pi - std::abs(theta) < kAntipodalTol)
        throw LogUndefined("eigenvalue within 1e-9 of -1");
      blocks(i + 1, i) = theta;
      blocks(i, i + 1) = -theta;
      i += 2;
    } else {
      if (t(i, i) < 0.0) throw LogUndefined("eigenvalue within 1e-9 of -1");
      i += 1;
    }
  }
  Mat x = u * blocks * u.transpose();
  return 0.5 * (x - x.transpose());
}

}  // namespace

Mat log_so(const GroupElement& g) {
  if (g.dim() == 3) return log_so3(g.mat());
  if (g.dim() == 2) {
    const double theta = std::atan2(g.mat()(1, 0), g.mat()(0, 0));
    if (std::numbers::pi - std::abs(theta) < kAntipodalTol)
      throw LogUndefined("eigenvalue within 1e-9 of -1");
    Mat x(2, 2);
    x << 0.0, -theta, theta, 0.0;
    return x;
  }
  return log_general(g.mat());
}

GroupElement exp_so(const Mat& x) {
  const Mat skew = 0.5 * (x - x.transpose());
  if (skew.rows() == 3) {
    const Eigen::Vector3d w = vee(skew);
    const double theta = w.norm();
    double a, b;
    if (theta < 1e-4) {
      const double t2 = theta * theta;
      a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
      b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
      a = std::sin(theta) / theta;
      b = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return GroupElement::unchecked(Mat::Identity(3, 3) + a * skew + b * skew * skew);
  }
  Mat e = skew.exp();
  return GroupElement::unchecked(e);
}

double distance(const GroupElement& g, const GroupElement& h) {
  const Mat rel = g.mat().transpose() * h.mat();
  if (rel.rows() == 3) {
    const double theta = rotation_angle(rel);
    if (std::numbers::pi - theta < kAntipodalTol)
      throw LogUndefined("rotation angle within 1e-9 of pi");
    return std::numbers::sqrt2 * theta;
  }
  return log_so(GroupElement::unchecked(rel)).norm();
}

DistanceResult distance_or_chordal(const GroupElement& g, const GroupElement& h) {
  try {
    return {distance(g, h), false};
  } catch (const LogUndefined&) {
    return {(g.mat() - h.mat()).norm(), true};
  }
}

GroupElement haar_sample(int dim, Rng& rng) {
  const Mat z = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return GroupElement::unchecked(q);
}

GroupElement haar_sample(int dim, std::uint64_t seed) {
  Rng rng(seed);
  return haar_sample(dim, rng);
}

GroupElement rot_x(double theta) { return plane_rotation(3, 1, 2, theta); }
GroupElement rot_y(double theta) { return plane_rotation(3, 2, 0, theta); }
GroupElement rot_z(double theta) { return plane_rotation(3, 0, 1, theta); }

GroupElement plane_rotation(int dim, int i, int j, double theta) {
  Mat m = Mat::Identity(dim, dim);
  const double c = std::cos(theta), s = std::sin(theta);
  m(i, i) = c;
  m(j, j) = c;
  m(j, i) = s;
  m(i, j) = -s;
  return GroupElement::unchecked(m);
}

GeneratorTuple reference_pair() {
  const double golden = std::numbers::pi * (std::sqrt(5.0) - 1.0);
  return GeneratorTuple({rot_z(golden), rot_x(golden)});
}

std::vector<Mat> read_matrices(std::istream& in) {
  std::vector<Mat> out;
  std::string line;
  auto next_nonblank = [&](std::string& l) {
    while (std::getline(in, l)) {
      if (l.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  while (next_nonblank(line)) {
    std::istringstream hs(line);
    int n = 0;
    if (!(hs >> n) || n <= 0) throw ConfigInvalid("matrix.dim", "bad header line '" + line + "'");
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
      if (!next_nonblank(line)) throw ConfigInvalid("matrix.rows", "unexpected end of file");
      std::istringstream rs(line);
      for (int j = 0; j < n; ++j)
        if (!(rs >> m(i, j))) throw ConfigInvalid("matrix.rows", "row " + std::to_string(i) + " too short");
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_matrices(std::ostream& out, const std::vector<Mat>& mats) {
  out << std::setprecision(17);
  for (const auto& m : mats) {
    out << m.rows() << '\n';
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
      out << '\n';
    }
  }
}

std::vector<Mat> read_matrices_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("path", "cannot open '" + path + "'");
  return read_matrices(in);
}

}  // namespace isokam
