#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "impc/engine.hpp"
#include "impc/geometry.hpp"
#include "impc/rng.hpp"
#include "impc/scenario.hpp"
#include "impc/separation.hpp"
#include "oracles.hpp"

using namespace impc;

TEST_CASE("extended buffer matches the closed form for every preset") {
  CHECK(extended_buffer(0.3, 0.2, 1.0) == Catch::Approx(0.36055512754639896).epsilon(1e-15));
  CHECK(extended_buffer(0.3, 0.15, 1.0) == Catch::Approx(0.33541019662496846).epsilon(1e-15));
  CHECK(extended_buffer(1.0, 0.2, 3.0) == Catch::Approx(1.1661903789690602).epsilon(1e-15));
  const ModelParams p = preset("2d_crowded").params;
  CHECK(p.extended_clearance() == Catch::Approx(extended_buffer(p.r_min, p.h, p.v_max)));
}

TEST_CASE("broadcast radius covers worst-case mutual reach plus both bands") {
  CHECK(comm_range(preset("2d_typical").params) ==
        Catch::Approx(4.560555127546399).epsilon(1e-15));
  CHECK(comm_range(preset("2d_crowded").params) ==
        Catch::Approx(4.135410196624968).epsilon(1e-15));
  CHECK(comm_range(preset("3d_highspeed").params) ==
        Catch::Approx(13.56619037896906).epsilon(1e-15));
}

TEST_CASE("separating plane sits halfway plus half the clearance") {
  Vec<2> own, other;
  own << 0.5, 0.0;
  other << -0.5, 0.0;
  const double clearance = 0.36055512754639896;
  const HalfPlane<2> pl = separating_halfplane<2>(own, other, clearance, 3, 9);
  CHECK(pl.normal[0] == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(pl.normal[1] == 0.0);
  CHECK(pl.offset == Catch::Approx(0.18027756377319948).epsilon(1e-14));
  CHECK(pl.k == 3);
  CHECK(pl.neighbor == 9);
  CHECK_FALSE(pl.terminal);
  CHECK(pl.slack(own) == Catch::Approx(0.31972243622680052).epsilon(1e-14));
}

TEST_CASE("mirrored planes split the gap evenly at any pose") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Vec<3> a, b;
    for (int c = 0; c < 3; ++c) {
      a[c] = rng.uniform(-2.0, 2.0);
      b[c] = rng.uniform(-2.0, 2.0);
    }
    const double dist = (a - b).norm();
    if (dist < 1e-3) continue;
    const double clearance = rng.uniform(0.1, 0.5);
    const HalfPlane<3> pa = separating_halfplane<3>(a, b, clearance, 1, 0);
    const HalfPlane<3> pb = separating_halfplane<3>(b, a, clearance, 1, 1);
    CHECK(pa.slack(a) == Catch::Approx(0.5 * (dist - clearance)).margin(1e-12));
    CHECK(pb.slack(b) == Catch::Approx(0.5 * (dist - clearance)).margin(1e-12));
    // Any pair of points satisfying both planes is at least `clearance` apart.
    CHECK(pa.slack(a) + pb.slack(b) == Catch::Approx(dist - clearance).margin(1e-12));
  }
}

TEST_CASE("coincident committed positions are a hard error") {
  Vec<2> p;
  p << 0.3, -0.2;
  CHECK_THROWS_AS(separating_halfplane<2>(p, p, 0.3, 2, 5), DegenerateGeometryError);
}

TEST_CASE("baseline cell plane uses the plain buffer") {
  Vec<2> own, other;
  own << 0.0, 0.0;
  other << 1.0, 0.0;
  const HalfPlane<2> pl = bvc_halfplane<2>(own, other, 0.3, 4);
  CHECK(pl.normal[0] == Catch::Approx(-1.0));
  CHECK(pl.offset == Catch::Approx(-0.35).epsilon(1e-14));
  CHECK(pl.slack(own) == Catch::Approx(0.35).epsilon(1e-14));
}

TEST_CASE("constraint builder emits one plane per neighbor per step") {
  const ModelParams prm = preset("2d_typical").params;
  const int k_max = prm.horizon;
  PredeterminedTrajectory<2> own;
  std::map<int, PredeterminedTrajectory<2>> nbrs;
  for (int k = 0; k < k_max; ++k) {
    Vec<2> p;
    p << 0.05 * k, 0.0;
    own.p.push_back(p);
  }
  for (int id : {7, 3}) {
    PredeterminedTrajectory<2> pt;
    for (int k = 0; k < k_max; ++k) {
      Vec<2> p;
      p << 0.05 * k, (id == 7 ? 1.0 : -1.0);
      pt.p.push_back(p);
    }
    nbrs[id] = pt;
  }
  const ConstraintSet<2> cons = build_constraints<2>(own, nbrs, prm);
  REQUIRE(cons.neighbor_ids == std::vector<int>{3, 7});
  REQUIRE(cons.planes.size() == static_cast<size_t>(2 * k_max));
  CHECK(cons.horizon == k_max);
  CHECK(cons.eps == prm.eps);
  for (int j = 0; j < 2; ++j)
    for (int k = 1; k <= k_max; ++k) {
      const HalfPlane<2>& pl = cons.planes[static_cast<size_t>(j * k_max + k - 1)];
      CHECK(pl.k == k);
      CHECK(pl.neighbor == cons.neighbor_ids[static_cast<size_t>(j)]);
      CHECK(pl.terminal == (k == k_max));
      // Own committed point keeps half the enforced clearance of slack.
      CHECK(pl.slack(own.p[static_cast<size_t>(k - 1)]) ==
            Catch::Approx(0.5 * (1.0 - prm.extended_clearance())).margin(1e-12));
    }
  CHECK(cons.terminal_index(1) == 2 * k_max - 1);

  PredeterminedTrajectory<2> short_pt = nbrs[3];
  short_pt.p.pop_back();
  std::map<int, PredeterminedTrajectory<2>> bad{{3, short_pt}};
  CHECK_THROWS_AS(build_constraints<2>(own, bad, prm), AssemblyError);
}

TEST_CASE("interpolated separation certificate is sound over a million pairs") {
  const impc::test::CertificateSweep sweep =
      impc::test::sweep_separation_certificate(90210, 1000000, 0.3);
  CHECK(sweep.counterexamples == 0);
  CHECK(sweep.worst_certified_distance >= 0.3 - 1e-12);
  // The certificate must actually fire on a healthy share of the samples.
  CHECK(sweep.certified > 100000);
}

TEST_CASE("buffered endpoints with bounded relative motion always certify") {
  Rng rng(4242);
  const ModelParams prm = preset("2d_crowded").params;
  const double rp = prm.extended_clearance();
  const double dmax = 2.0 * prm.h * prm.v_max;
  for (int trial = 0; trial < 100000; ++trial) {
    SegmentPair<2> s;
    const double a1 = rng.uniform(0.0, 2.0 * M_PI);
    const double m1 = rng.uniform(rp, 3.0);
    s.r1 << m1 * std::cos(a1), m1 * std::sin(a1);
    // Relative displacement of one synchronized step: at most 2 h v_max.
    Vec<2> delta;
    const double ad = rng.uniform(0.0, 2.0 * M_PI);
    const double md = rng.uniform(0.0, dmax);
    delta << md * std::cos(ad), md * std::sin(ad);
    s.r2 = s.r1 + delta;
    if (s.r2.norm() < rp) continue;  // the engine re-certifies endpoints each round
    REQUIRE(lemma_endpoint_condition<2>(s, prm.r_min));
    REQUIRE(segment_pair_min_distance<2>(s) >= prm.r_min - 1e-12);
  }
}

TEST_CASE("closed-form segment distance matches a golden-section oracle") {
  Rng rng(31337);
  for (int trial = 0; trial < 10000; ++trial) {
    SegmentPair<3> s;
    for (int c = 0; c < 3; ++c) {
      s.r1[c] = rng.uniform(-2.0, 2.0);
      s.r2[c] = rng.uniform(-2.0, 2.0);
    }
    auto dist_at = [&](double t) { return (s.r1 + t * (s.r2 - s.r1)).norm(); };
    // The squared distance is convex in t, so golden-section search on [0, 1]
    // converges to the global minimum without using the closed form.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double t1 = hi - gr * (hi - lo), t2 = lo + gr * (hi - lo);
    double f1 = dist_at(t1), f2 = dist_at(t2);
    for (int it = 0; it < 120; ++it) {
      if (f1 < f2) {
        hi = t2;
        t2 = t1;
        f2 = f1;
        t1 = hi - gr * (hi - lo);
        f1 = dist_at(t1);
      } else {
        lo = t1;
        t1 = t2;
        f1 = f2;
        t2 = lo + gr * (hi - lo);
        f2 = dist_at(t2);
      }
    }
    const double oracle = std::min({dist_at(lo), dist_at(hi), dist_at(0.5 * (lo + hi))});
    CHECK(segment_pair_min_distance<3>(s) == Catch::Approx(oracle).margin(1e-4));
    CHECK(segment_pair_min_distance<3>(s) <= oracle + 1e-12);
  }
}

TEST_CASE("closed-form segment distance matches dense sampling") {
  // 1e5 sample points resolve the minimum to well under the 1e-4 margin for
  // segments of this size (speed/(2(samples-1)) < 4e-5).
  const impc::test::SamplingAgreement ag =
      impc::test::compare_distance_to_sampling(60601, 2000, 100000);
  CHECK(ag.worst_gap < 1e-4);
  CHECK(ag.worst_overshoot <= 1e-12);
}

TEST_CASE("stationary pair distance equals the plain norm") {
  SegmentPair<2> s;
  s.r1 << 0.4, 0.3;
  s.r2 = s.r1;
  CHECK(segment_pair_min_distance<2>(s) == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("collinearity detector flags degenerate target layouts") {
  std::vector<Eigen::Vector2d> pts{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}};
  CHECK(any_three_collinear_xy(pts));
  pts = {{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.8}};
  CHECK_FALSE(any_three_collinear_xy(pts));
  pts = {{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.8}, {0.5, 0.4}, {0.7, 0.7}};
  CHECK_FALSE(any_three_collinear_xy(pts));
  pts.push_back({0.25, 0.4});  // collinear with (0,0) and (0.5, 0.8)
  CHECK(any_three_collinear_xy(pts));
  pts = {{0.3, 0.3}, {0.3, 0.3}, {5.0, -1.0}};  // coincident counts as degenerate
  CHECK(any_three_collinear_xy(pts));
}
