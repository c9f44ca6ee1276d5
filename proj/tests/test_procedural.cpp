#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "articraft/procedural.hpp"
#include "articraft/queries.hpp"

using namespace articraft;

namespace {

void require_closed(const TriMesh& mesh) {
    WatertightReport r = analyze_watertight(mesh);
    INFO("boundary=" << r.boundary_edges << " mismatched=" << r.mismatched_edges
                     << " nonmanifold=" << r.nonmanifold_edges);
    REQUIRE(r.closed);
}

}  // namespace

TEST_CASE("wheel mesh is closed and rotationally symmetric") {
    WheelParams params;
    params.radius = 0.12;
    params.width = 0.05;
    params.spokes = 5;
    params.bore = 0.015;
    params.segments = 64;
    TriMesh wheel = make_wheel_mesh(params);
    require_closed(wheel);
    CHECK(mesh_volume(wheel) > 0.0);

    // The vertex set maps onto itself under a 2*pi/spokes turn.
    Mat3 turn = rotation_z(2.0 * kPi / params.spokes);
    Bvh bvh(wheel);
    for (std::size_t i = 0; i < wheel.vertices.size(); i += 7) {
        Vec3 spun = turn * wheel.vertices[i];
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& v : wheel.vertices) best = std::min(best, (v - spun).norm());
        CHECK(best < 1e-9);
    }

    // Bore stays open: the axis point is not inside the solid.
    CHECK_FALSE(point_in_mesh({0, 0, 0}, wheel));
    CHECK(point_in_mesh({params.radius - 0.005, 0, 0}, wheel));
}

TEST_CASE("wheel without bore fills the hub") {
    WheelParams params;
    params.radius = 0.1;
    params.width = 0.04;
    params.spokes = 6;
    params.bore = 0.0;
    TriMesh wheel = make_wheel_mesh(params);
    require_closed(wheel);
    CHECK(point_in_mesh({0, 0, 0}, wheel));
}

TEST_CASE("wheel parameter validation") {
    WheelParams bad;
    bad.bore = 0.09;  // bore eats the rim
    bad.radius = 0.1;
    CHECK_THROWS_AS(make_wheel_mesh(bad), Error);
    WheelParams few;
    few.segments = 4;
    CHECK_THROWS_AS(make_wheel_mesh(few), Error);
}

TEST_CASE("barrel hinge pieces are closed and assemble in place") {
    BarrelHingeParams params;
    for (const char* piece : {"assembly", "leaf_a", "leaf_b", "barrel"}) {
        params.piece = piece;
        TriMesh mesh = make_barrel_hinge_mesh(params);
        require_closed(mesh);
        CHECK(mesh_volume(mesh) > 0.0);
    }
    params.piece = "lid";
    CHECK_THROWS_AS(make_barrel_hinge_mesh(params), Error);

    params.piece = "leaf_a";
    Aabb a = mesh_aabb(make_barrel_hinge_mesh(params));
    params.piece = "leaf_b";
    Aabb b = mesh_aabb(make_barrel_hinge_mesh(params));
    CHECK(a.lo.x >= -1e-12);  // leaf_a sits on +x
    CHECK(b.hi.x <= 1e-12);   // leaf_b mirrors onto -x
}

TEST_CASE("perforated panel punches the requested grid") {
    PerforatedPanelParams params;
    params.size = {0.2, 0.1, 0.005};
    params.cols = 4;
    params.rows = 2;
    params.hole_radius = 0.008;
    params.segments = 64;
    TriMesh panel = make_perforated_panel_mesh(params);
    require_closed(panel);

    double cell_w = params.size.x / params.cols;
    double cell_h = params.size.y / params.rows;
    double plate = params.size.x * params.size.y * params.size.z;
    double holes = kPi * params.hole_radius * params.hole_radius * params.size.z * params.cols * params.rows;
    CHECK(std::abs(mesh_volume(panel) - (plate - holes)) / (plate - holes) < 0.01);

    // Hole centers are open, cell corners are solid.
    Vec3 first_center{-params.size.x / 2 + cell_w / 2, -params.size.y / 2 + cell_h / 2, 0};
    CHECK_FALSE(point_in_mesh(first_center, panel));
    CHECK(point_in_mesh(first_center + Vec3{cell_w / 2 - 1e-4, cell_h / 2 - 1e-4, 0}, panel));

    params.hole_radius = cell_h / 2;  // 2r == cell height
    CHECK_THROWS_AS(make_perforated_panel_mesh(params), Error);
}

TEST_CASE("swept tube follows its polyline") {
    SweptTubeParams params;
    params.points = {{0, 0, 0}, {0.1, 0, 0}, {0.1, 0.1, 0}, {0.1, 0.1, 0.1}};
    params.radius = 0.008;
    params.segments = 24;
    TriMesh tube = make_swept_tube_mesh(params);
    require_closed(tube);

    // Volume is close to sum of segment cylinders (miters trade corner volume).
    double length = 0.3;
    double analytic = kPi * params.radius * params.radius * length;
    CHECK(std::abs(mesh_volume(tube) - analytic) / analytic < 0.05);

    // Midpoints of straight runs are enclosed.
    CHECK(point_in_mesh({0.05, 0, 0}, tube));
    CHECK(point_in_mesh({0.1, 0.05, 0}, tube));
    CHECK(point_in_mesh({0.1, 0.1, 0.05}, tube));
    CHECK_FALSE(point_in_mesh({0.05, 0.05, 0.05}, tube));
}

TEST_CASE("swept tube input validation") {
    SweptTubeParams params;
    params.points = {{0, 0, 0}};
    CHECK_THROWS_AS(make_swept_tube_mesh(params), Error);
    params.points = {{0, 0, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(make_swept_tube_mesh(params), Error);
    params.points = {{0, 0, 0}, {0.1, 0, 0}, {0.05, 0, 0}};  // reversal
    CHECK_THROWS_AS(make_swept_tube_mesh(params), Error);
    params.points = {{0, 0, 0}, {0.1, 0, 0}};
    params.radius = 0.0;
    CHECK_THROWS_AS(make_swept_tube_mesh(params), Error);
}

TEST_CASE("procedural solids report sane mass properties") {
    WheelParams params;
    params.bore = 0.0;
    TriMesh wheel = make_wheel_mesh(params);
    MassProperties mp = mesh_mass_properties(wheel, 1.0);
    // Symmetric about z: COM on the axis, products vanish.
    CHECK(std::abs(mp.com.x) < 1e-12);
    CHECK(std::abs(mp.com.y) < 1e-12);
    CHECK(std::abs(mp.inertia_com(0, 1)) < 1e-12);
    CHECK(mp.inertia_com(2, 2) > mp.inertia_com(0, 0));  // flat disc spins easiest about z
}
