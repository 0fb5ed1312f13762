#pragma once

// Box-shaped convex domains, their faces, and the affine spans of faces.

#include "saddleflow/common.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace saddleflow {

enum class Bound { AtLower, AtUpper };

/// Product of closed intervals {z : lower <= z <= upper}; bounds may be infinite.
class BoxDomain {
public:
    BoxDomain(Vector lower, Vector upper);

    /// Whole space of dimension `dim`.
    static BoxDomain unbounded(int dim);
    /// Nonnegative orthant of dimension `dim`.
    static BoxDomain orthant(int dim);

    int dim() const noexcept { return static_cast<int>(lower_.size()); }
    const Vector& lower() const noexcept { return lower_; }
    const Vector& upper() const noexcept { return upper_; }

    bool has_lower(int i) const { return std::isfinite(lower_(i)); }
    bool has_upper(int i) const { return std::isfinite(upper_(i)); }
    /// lower == upper, so the coordinate is fixed.
    bool is_fixed(int i) const { return lower_(i) == upper_(i); }

    bool at_lower(const Vector& z, int i) const { return has_lower(i) && z(i) - lower_(i) <= kBoundTol; }
    bool at_upper(const Vector& z, int i) const { return has_upper(i) && upper_(i) - z(i) <= kBoundTol; }

    /// Largest bound violation of `z` (0 when inside).
    double violation(const Vector& z) const;
    bool contains(const Vector& z, double tol = kBoundTol) const { return violation(z) <= tol; }

    /// Number of finite bounds over all non-fixed coordinates.
    int finite_bound_count() const;

    bool operator==(const BoxDomain& other) const {
        return lower_ == other.lower_ && upper_ == other.upper_;
    }

    /// Sub-box over coordinates [offset, offset+count).
    BoxDomain slice(int offset, int count) const;
    /// Cartesian product this x other.
    BoxDomain product(const BoxDomain& other) const;

private:
    Vector lower_;
    Vector upper_;
};

/// A face of a box, given by the coordinates pinned at one of their bounds.
/// Fixed coordinates (lower == upper) are always pinned AtLower.
struct FaceDescriptor {
    BoxDomain domain;
    std::map<int, Bound> pinned;

    FaceDescriptor(BoxDomain d, std::map<int, Bound> p);

    double pinned_value(int i) const;
    bool contains(const Vector& z, double tol = kBoundTol) const;
    /// Face is a subset of `other` (both faces of the same box).
    bool subset_of(const FaceDescriptor& other) const;
    bool operator==(const FaceDescriptor& other) const {
        return domain == other.domain && pinned == other.pinned;
    }
};

/// Affine subspace anchor + range(projector).
struct AffineSubspace {
    int dim = 0;
    Vector anchor;
    Matrix projector;

    AffineSubspace(Vector anchor, Matrix projector);
};

/// Componentwise clamp onto the box.
Vector project_point(const BoxDomain& domain, const Vector& z);

/// f minus its projection onto the normal cone of the box at z.
Vector projected_field(const BoxDomain& domain, const Vector& z, const Vector& f);

FaceDescriptor minimal_face_containing(const BoxDomain& domain, const std::vector<Vector>& points);

AffineSubspace affine_span_projector(const FaceDescriptor& face);

/// Box whose pinned coordinates are fixed at their bound and the rest free.
/// Projected dynamics on this box are the dynamics on the face's affine span.
BoxDomain affine_span_box(const FaceDescriptor& face);

/// Every face of the box; guarded at 20 finite bounds.
std::vector<FaceDescriptor> enumerate_faces(const BoxDomain& domain);

}  // namespace saddleflow
