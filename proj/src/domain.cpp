#include "saddleflow/domain.hpp"

#include <cmath>
#include <limits>

namespace saddleflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFaceGuard = 20;
}  // namespace

BoxDomain::BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0) throw InputError("BoxDomain: dimension must be positive");
    if (lower_.size() != upper_.size()) throw InputError("BoxDomain: lower/upper length mismatch");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        const double lo = lower_(i);
        const double hi = upper_(i);
        if (std::isnan(lo) || std::isnan(hi)) throw InputError("BoxDomain: NaN bound at " + std::to_string(i));
        if (lo > hi) throw InputError("BoxDomain: lower > upper at " + std::to_string(i));
        if (lo == kInf || hi == -kInf) throw InputError("BoxDomain: empty interval at " + std::to_string(i));
    }
}

BoxDomain BoxDomain::unbounded(int dim) {
    return BoxDomain(Vector::Constant(dim, -kInf), Vector::Constant(dim, kInf));
}

BoxDomain BoxDomain::orthant(int dim) {
    return BoxDomain(Vector::Zero(dim), Vector::Constant(dim, kInf));
}

double BoxDomain::violation(const Vector& z) const {
    require_dim(z, dim(), "BoxDomain::violation");
    double worst = 0.0;
    for (int i = 0; i < dim(); ++i) {
        if (!std::isfinite(z(i))) return kInf;
        worst = std::max(worst, lower_(i) - z(i));
        worst = std::max(worst, z(i) - upper_(i));
    }
    return worst;
}

int BoxDomain::finite_bound_count() const {
    int count = 0;
    for (int i = 0; i < dim(); ++i) {
        if (is_fixed(i)) continue;
        count += has_lower(i) ? 1 : 0;
        count += has_upper(i) ? 1 : 0;
    }
    return count;
}

BoxDomain BoxDomain::slice(int offset, int count) const {
    if (offset < 0 || count <= 0 || offset + count > dim()) throw InputError("BoxDomain::slice: out of range");
    return BoxDomain(lower_.segment(offset, count), upper_.segment(offset, count));
}

BoxDomain BoxDomain::product(const BoxDomain& other) const {
    Vector lo(dim() + other.dim());
    Vector hi(dim() + other.dim());
    lo << lower_, other.lower_;
    hi << upper_, other.upper_;
    return BoxDomain(std::move(lo), std::move(hi));
}

FaceDescriptor::FaceDescriptor(BoxDomain d, std::map<int, Bound> p) : domain(std::move(d)), pinned(std::move(p)) {
    for (const auto& [i, side] : pinned) {
        if (i < 0 || i >= domain.dim()) throw InputError("FaceDescriptor: pinned index out of range");
        const bool finite = side == Bound::AtLower ? domain.has_lower(i) : domain.has_upper(i);
        if (!finite) throw InputError("FaceDescriptor: coordinate " + std::to_string(i) + " pinned at an infinite bound");
        if (domain.is_fixed(i) && side != Bound::AtLower) {
            throw InputError("FaceDescriptor: fixed coordinate " + std::to_string(i) + " must be pinned AtLower");
        }
    }
    for (int i = 0; i < domain.dim(); ++i) {
        if (domain.is_fixed(i) && !pinned.count(i)) {
            throw InputError("FaceDescriptor: fixed coordinate " + std::to_string(i) + " must be pinned");
        }
    }
}

double FaceDescriptor::pinned_value(int i) const {
    const auto it = pinned.find(i);
    if (it == pinned.end()) throw InputError("FaceDescriptor: coordinate not pinned");
    return it->second == Bound::AtLower ? domain.lower()(i) : domain.upper()(i);
}

bool FaceDescriptor::contains(const Vector& z, double tol) const {
    if (!domain.contains(z, tol)) return false;
    for (const auto& [i, side] : pinned) {
        (void)side;
        if (std::abs(z(i) - pinned_value(i)) > tol) return false;
    }
    return true;
}

bool FaceDescriptor::subset_of(const FaceDescriptor& other) const {
    for (const auto& [i, side] : other.pinned) {
        const auto it = pinned.find(i);
        if (it == pinned.end() || it->second != side) return false;
    }
    return true;
}

AffineSubspace::AffineSubspace(Vector a, Matrix p) : dim(static_cast<int>(a.size())), anchor(std::move(a)), projector(std::move(p)) {
    if (projector.rows() != dim || projector.cols() != dim) throw InputError("AffineSubspace: projector shape mismatch");
    if ((projector * projector - projector).cwiseAbs().maxCoeff() > 1e-10 ||
        (projector - projector.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InputError("AffineSubspace: projector is not a symmetric idempotent");
    }
}

Vector project_point(const BoxDomain& domain, const Vector& z) {
    require_dim(z, domain.dim(), "project_point");
    return z.cwiseMax(domain.lower()).cwiseMin(domain.upper());
}

Vector projected_field(const BoxDomain& domain, const Vector& z, const Vector& f) {
    require_dim(z, domain.dim(), "projected_field");
    require_dim(f, domain.dim(), "projected_field");
    if (domain.violation(z) > kBoundTol) throw StateError("projected_field: point lies outside the domain");
    Vector v = f;
    for (int i = 0; i < domain.dim(); ++i) {
        if (domain.at_lower(z, i) && v(i) < 0.0) v(i) = 0.0;
        if (domain.at_upper(z, i) && v(i) > 0.0) v(i) = 0.0;
    }
    return v;
}

FaceDescriptor minimal_face_containing(const BoxDomain& domain, const std::vector<Vector>& points) {
    if (points.empty()) throw InputError("minimal_face_containing: empty point list");
    for (const auto& z : points) {
        require_dim(z, domain.dim(), "minimal_face_containing");
        if (domain.violation(z) > kBoundTol) throw StateError("minimal_face_containing: point outside the domain");
    }
    std::map<int, Bound> pinned;
    for (int i = 0; i < domain.dim(); ++i) {
        if (domain.is_fixed(i)) {
            pinned[i] = Bound::AtLower;
            continue;
        }
        bool all_lower = true;
        bool all_upper = true;
        for (const auto& z : points) {
            all_lower = all_lower && domain.at_lower(z, i);
            all_upper = all_upper && domain.at_upper(z, i);
        }
        if (all_lower) pinned[i] = Bound::AtLower;
        else if (all_upper) pinned[i] = Bound::AtUpper;
    }
    return FaceDescriptor(domain, std::move(pinned));
}

AffineSubspace affine_span_projector(const FaceDescriptor& face) {
    const int d = face.domain.dim();
    Vector anchor = Vector::Zero(d);
    Matrix proj = Matrix::Identity(d, d);
    for (const auto& [i, side] : face.pinned) {
        (void)side;
        anchor(i) = face.pinned_value(i);
        proj(i, i) = 0.0;
    }
    return AffineSubspace(std::move(anchor), std::move(proj));
}

BoxDomain affine_span_box(const FaceDescriptor& face) {
    const int d = face.domain.dim();
    Vector lo = Vector::Constant(d, -kInf);
    Vector hi = Vector::Constant(d, kInf);
    for (const auto& [i, side] : face.pinned) {
        (void)side;
        lo(i) = hi(i) = face.pinned_value(i);
    }
    return BoxDomain(std::move(lo), std::move(hi));
}

std::vector<FaceDescriptor> enumerate_faces(const BoxDomain& domain) {
    if (domain.finite_bound_count() > kFaceGuard) {
        throw CapacityError("enumerate_faces: more than " + std::to_string(kFaceGuard) + " finite bounds");
    }
    std::vector<std::map<int, Bound>> partial{{}};
    for (int i = 0; i < domain.dim(); ++i) {
        std::vector<std::map<int, Bound>> next;
        for (const auto& p : partial) {
            if (domain.is_fixed(i)) {
                auto q = p;
                q[i] = Bound::AtLower;
                next.push_back(std::move(q));
                continue;
            }
            next.push_back(p);
            if (domain.has_lower(i)) {
                auto q = p;
                q[i] = Bound::AtLower;
                next.push_back(std::move(q));
            }
            if (domain.has_upper(i)) {
                auto q = p;
                q[i] = Bound::AtUpper;
                next.push_back(std::move(q));
            }
        }
        partial = std::move(next);
    }
    std::vector<FaceDescriptor> faces;
    faces.reserve(partial.size());
    for (auto& p : partial) faces.emplace_back(domain, std::move(p));
    return faces;
}

}  // namespace saddleflow
