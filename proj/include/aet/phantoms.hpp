#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aet/forward.hpp"

namespace aet {

/// Geometric primitive with a conductivity value. In a phantom the later
/// primitive wins wherever regions overlap. Membership tests use strict
/// inequalities, so points exactly on an interface take the outer value.
struct PhantomPrimitive {
    enum class Kind { disk, ellipse, rotated_rect, annulus };

    Kind kind = Kind::disk;
    double value = 1.0;
    std::string name;

    // disk: center (cx, cy), radius r.
    // ellipse: center, semi-axes (ax along local x, ay along local y),
    //          rotation angle_deg counterclockwise.
    // rotated_rect: |u - cx| < hx and |v - cy| < hy with u, v the coordinates
    //               along (cos a, sin a) and (sin a, -cos a), a = angle_deg.
    // annulus: disk (cx, cy, r) minus hole disk (hx_c, hy_c, hr).
    double cx = 0.0, cy = 0.0;
    double r = 0.0;
    double ax = 0.0, ay = 0.0;
    double hx = 0.0, hy = 0.0;
    double angle_deg = 0.0;
    double hx_c = 0.0, hy_c = 0.0, hr = 0.0;

    bool contains(double x, double y) const;
};

struct Phantom {
    std::string id;
    double background = 1.0;
    std::vector<PhantomPrimitive> primitives;  // later entries win

    double eval(double x, double y) const;
    std::function<double(double, double)> evaluator() const;
};

/// Off-center disk inclusion (value 2 inside radius 0.3 about (0.2, 0.2)).
Phantom disk_phantom();
/// Torso-like layout: two low-conductivity ellipses and one high disk.
Phantom heart_lung_phantom();
/// Rotated rectangle inclusion (value 2).
Phantom rotated_rect_phantom();
/// Square, two overlapping disks, and a bean-shaped annulus with a hole.
Phantom composite_phantom();

/// Lookup by id; accepts disk|heart_lung|rotated_rect|composite and the
/// aliases test1..test4 and heart|rect.
Phantom phantom_by_name(const std::string& name);

/// JSON schema: {"id": ..., "background": ..., "primitives": [{"kind": ...,
/// "value": ..., geometry fields}]}. Precedence is list order.
Phantom phantom_from_json_text(const std::string& text);
Phantom phantom_from_json_file(const std::string& path);
std::string phantom_to_json_text(const Phantom& phantom);

}  // namespace aet
