#include "aet/phantoms.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "aet/errors.hpp"

namespace aet {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

bool PhantomPrimitive::contains(double x, double y) const {
    switch (kind) {
        case Kind::disk: {
            const double dx = x - cx, dy = y - cy;
            return dx * dx + dy * dy < r * r;
        }
        case Kind::ellipse: {
            const double a = deg2rad(angle_deg);
            const double dx = x - cx, dy = y - cy;
            const double u = dx * std::cos(a) + dy * std::sin(a);
            const double v = -dx * std::sin(a) + dy * std::cos(a);
            return (u / ax) * (u / ax) + (v / ay) * (v / ay) < 1.0;
        }
        case Kind::rotated_rect: {
            const double a = deg2rad(angle_deg);
            const double u = x * std::cos(a) + y * std::sin(a);
            const double v = x * std::sin(a) - y * std::cos(a);
            return std::abs(u - cx) < hx && std::abs(v - cy) < hy;
        }
        case Kind::annulus: {
            const double dx = x - cx, dy = y - cy;
            if (!(dx * dx + dy * dy < r * r)) return false;
            const double ex = x - hx_c, ey = y - hy_c;
            return !(ex * ex + ey * ey < hr * hr);
        }
    }
    return false;
}

double Phantom::eval(double x, double y) const {
    double value = background;
    for (const auto& p : primitives) {
        if (p.contains(x, y)) value = p.value;
    }
    return value;
}

std::function<double(double, double)> Phantom::evaluator() const {
    Phantom copy = *this;
    return [copy](double x, double y) { return copy.eval(x, y); };
}

Phantom disk_phantom() {
    Phantom p;
    p.id = "disk";
    PhantomPrimitive inc;
    inc.kind = PhantomPrimitive::Kind::disk;
    inc.name = "inclusion";
    inc.value = 2.0;
    inc.cx = 0.2;
    inc.cy = 0.2;
    inc.r = 0.3;
    p.primitives.push_back(inc);
    return p;
}

Phantom heart_lung_phantom() {
    Phantom p;
    p.id = "heart_lung";

    PhantomPrimitive lung_right;
    lung_right.kind = PhantomPrimitive::Kind::ellipse;
    lung_right.name = "lung_right";
    lung_right.value = 0.5;
    lung_right.cx = 0.45;
    lung_right.cy = -0.1;
    lung_right.ax = 0.2;
    lung_right.ay = 0.45;
    lung_right.angle_deg = -35.0;
    p.primitives.push_back(lung_right);

    PhantomPrimitive lung_left = lung_right;
    lung_left.name = "lung_left";
    lung_left.cx = -0.45;
    lung_left.angle_deg = 35.0;
    p.primitives.push_back(lung_left);

    PhantomPrimitive heart;
    heart.kind = PhantomPrimitive::Kind::disk;
    heart.name = "heart";
    heart.value = 2.0;
    heart.cx = 0.1;
    heart.cy = 0.5;
    heart.r = 0.2;
    p.primitives.push_back(heart);
    return p;
}

Phantom rotated_rect_phantom() {
    Phantom p;
    p.id = "rotated_rect";
    PhantomPrimitive rect;
    rect.kind = PhantomPrimitive::Kind::rotated_rect;
    rect.name = "inclusion";
    rect.value = 2.0;
    // |x/sqrt2 + y/sqrt2 - 0.2| < 0.2 and |x/sqrt2 - y/sqrt2 - 0.2| < 0.4
    rect.angle_deg = 45.0;
    rect.cx = 0.2;
    rect.cy = 0.2;
    rect.hx = 0.2;
    rect.hy = 0.4;
    p.primitives.push_back(rect);
    return p;
}

Phantom composite_phantom() {
    Phantom p;
    p.id = "composite";

    PhantomPrimitive square;
    square.kind = PhantomPrimitive::Kind::rotated_rect;
    square.name = "square";
    square.value = 3.0;
    square.angle_deg = 0.0;
    square.cx = 0.0;
    square.cy = 0.0;
    square.hx = 0.1;
    square.hy = 0.1;
    p.primitives.push_back(square);

    PhantomPrimitive disk_a;
    disk_a.kind = PhantomPrimitive::Kind::disk;
    disk_a.name = "disk_a";
    disk_a.value = 2.0;
    disk_a.cx = -0.1;
    disk_a.cy = 0.5;
    disk_a.r = 0.2;
    p.primitives.push_back(disk_a);

    PhantomPrimitive disk_b = disk_a;
    disk_b.name = "disk_b";
    disk_b.value = 1.0;
    disk_b.cx = 0.1;
    p.primitives.push_back(disk_b);

    PhantomPrimitive bean;
    bean.kind = PhantomPrimitive::Kind::annulus;
    bean.name = "bean";
    bean.value = 2.0;
    bean.cx = 0.0;
    bean.cy = -0.5;
    bean.r = 0.28;
    bean.hx_c = 0.06;
    bean.hy_c = -0.5;
    bean.hr = 0.13;
    p.primitives.push_back(bean);

    PhantomPrimitive hole;
    hole.kind = PhantomPrimitive::Kind::disk;
    hole.name = "bean_hole";
    hole.value = 0.5;
    hole.cx = 0.06;
    hole.cy = -0.5;
    hole.r = 0.13;
    p.primitives.push_back(hole);
    return p;
}

Phantom phantom_by_name(const std::string& name) {
    if (name == "disk" || name == "test1") return disk_phantom();
    if (name == "heart_lung" || name == "heart" || name == "test2") return heart_lung_phantom();
    if (name == "rotated_rect" || name == "rect" || name == "test3") return rotated_rect_phantom();
    if (name == "composite" || name == "test4") return composite_phantom();
    throw InvalidParameterError("unknown phantom: " + name);
}

namespace {

PhantomPrimitive::Kind kind_from_string(const std::string& k) {
    if (k == "disk") return PhantomPrimitive::Kind::disk;
    if (k == "ellipse") return PhantomPrimitive::Kind::ellipse;
    if (k == "rotated_rect") return PhantomPrimitive::Kind::rotated_rect;
    if (k == "annulus") return PhantomPrimitive::Kind::annulus;
    throw ConfigError("phantom: unknown primitive kind '" + k + "'");
}

std::string kind_to_string(PhantomPrimitive::Kind k) {
    switch (k) {
        case PhantomPrimitive::Kind::disk: return "disk";
        case PhantomPrimitive::Kind::ellipse: return "ellipse";
        case PhantomPrimitive::Kind::rotated_rect: return "rotated_rect";
        case PhantomPrimitive::Kind::annulus: return "annulus";
    }
    return "disk";
}

}  // namespace

Phantom phantom_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("phantom: invalid JSON: ") + e.what());
    }
    Phantom p;
    p.id = j.value("id", "custom");
    p.background = j.value("background", 1.0);
    for (const auto& jp : j.value("primitives", nlohmann::json::array())) {
        PhantomPrimitive prim;
        prim.kind = kind_from_string(jp.at("kind").get<std::string>());
        prim.value = jp.at("value").get<double>();
        prim.name = jp.value("name", "");
        prim.cx = jp.value("cx", 0.0);
        prim.cy = jp.value("cy", 0.0);
        prim.r = jp.value("r", 0.0);
        prim.ax = jp.value("ax", 0.0);
        prim.ay = jp.value("ay", 0.0);
        prim.hx = jp.value("hx", 0.0);
        prim.hy = jp.value("hy", 0.0);
        prim.angle_deg = jp.value("angle_deg", 0.0);
        prim.hx_c = jp.value("hole_cx", 0.0);
        prim.hy_c = jp.value("hole_cy", 0.0);
        prim.hr = jp.value("hole_r", 0.0);
        p.primitives.push_back(prim);
    }
    return p;
}

Phantom phantom_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("phantom: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return phantom_from_json_text(ss.str());
}

std::string phantom_to_json_text(const Phantom& phantom) {
    nlohmann::json j;
    j["id"] = phantom.id;
    j["background"] = phantom.background;
    j["primitives"] = nlohmann::json::array();
    for (const auto& p : phantom.primitives) {
        nlohmann::json jp;
        jp["kind"] = kind_to_string(p.kind);
        jp["value"] = p.value;
        if (!p.name.empty()) jp["name"] = p.name;
        switch (p.kind) {
            case PhantomPrimitive::Kind::disk:
                jp["cx"] = p.cx; jp["cy"] = p.cy; jp["r"] = p.r;
                break;
            case PhantomPrimitive::Kind::ellipse:
                jp["cx"] = p.cx; jp["cy"] = p.cy; jp["ax"] = p.ax; jp["ay"] = p.ay;
                jp["angle_deg"] = p.angle_deg;
                break;
            case PhantomPrimitive::Kind::rotated_rect:
                jp["cx"] = p.cx; jp["cy"] = p.cy; jp["hx"] = p.hx; jp["hy"] = p.hy;
                jp["angle_deg"] = p.angle_deg;
                break;
            case PhantomPrimitive::Kind::annulus:
                jp["cx"] = p.cx; jp["cy"] = p.cy; jp["r"] = p.r;
                jp["hole_cx"] = p.hx_c; jp["hole_cy"] = p.hy_c; jp["hole_r"] = p.hr;
                break;
        }
        j["primitives"].push_back(jp);
    }
    return j.dump(2) + "\n";
}

}  // namespace aet
