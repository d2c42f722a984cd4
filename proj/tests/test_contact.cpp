#include <random>

#include <gtest/gtest.h>

#include "nmsgait/contact.hpp"
#include "oracles.hpp"

using namespace nmsgait;

TEST(Terrain, FlatAndStepHeights) {
  const Terrain flat = Terrain::flat();
  EXPECT_EQ(flat.height(-10.0), 0.0);
  EXPECT_EQ(flat.height(10.0), 0.0);
  const Terrain step = Terrain::step_down(5.0, 0.03);
  EXPECT_EQ(step.height(4.999), 0.0);
  EXPECT_EQ(step.height(5.0), -0.03);
  EXPECT_EQ(step.height(100.0), -0.03);
}

TEST(Terrain, RejectsUnsortedOrNonFiniteBreakpoints) {
  EXPECT_THROW(Terrain({{1.0, 0.0}, {1.0, -0.1}}), std::invalid_argument);
  EXPECT_THROW(Terrain({{2.0, 0.0}, {1.0, -0.1}}), std::invalid_argument);
  EXPECT_THROW(Terrain({{1.0, std::nan("")}}), std::invalid_argument);
  EXPECT_NO_THROW(Terrain({{1.0, -0.01}, {2.0, -0.02}}));
}

TEST(Contact, NormalForceClosedForm) {
  const ContactParams p;
  EXPECT_EQ(normal_force(-0.001, 0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(normal_force(0.005, 0.0, p), 81500.0 * 0.005);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-0.01, 0.03), r(-0.5, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const double depth = d(rng), rate = r(rng);
    const double f = normal_force(depth, rate, p);
    EXPECT_NEAR(f, oracle::contact_normal(p.stiffness, p.relax_velocity, depth, rate), 1e-9);
    EXPECT_GE(f, 0.0);
  }
}

TEST(Contact, FrictionInsideCone) {
  const ContactParams p;
  EXPECT_LE(std::abs(friction_force(800.0, 5.0, p)), 720.0);
  EXPECT_EQ(friction_force(0.0, 1.0, p), 0.0);
  EXPECT_EQ(friction_force(100.0, 0.0, p), 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> n(0.0, 3000.0), v(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double fn = n(rng), vs = v(rng);
    const double ft = friction_force(fn, vs, p);
    EXPECT_LE(std::abs(ft), p.friction * fn + 1e-9);
    if (vs != 0.0) EXPECT_LT(ft * vs, 0.0);  // opposes sliding
  }
}

TEST(Contact, FootAboveGroundHasNoForce) {
  const BipedModel m = BipedModel::build(Anthropometry::geyer_herr());
  ModelState s = m.standing_pose();
  s.q[dof::kY] += 0.001;
  s.qd[dof::kY] = -1.0;
  for (const ContactForce& c : ground_contact(m, s, Terrain::flat(), {})) {
    EXPECT_EQ(c.force.x(), 0.0);
    EXPECT_EQ(c.force.y(), 0.0);
  }
}

TEST(Contact, StaticPenetrationMatchesLaw) {
  const BipedModel m = BipedModel::build(Anthropometry::geyer_herr());
  ModelState s = m.standing_pose();
  s.q[dof::kY] -= 0.005;
  const ContactParams p;
  for (const ContactForce& c : ground_contact(m, s, Terrain::flat(), p)) {
    EXPECT_NEAR(c.force.y(), p.stiffness * 0.005, 1e-6);
    EXPECT_EQ(c.force.x(), 0.0);
  }
}

TEST(Contact, StepTerrainChangesPenetration) {
  const BipedModel m = BipedModel::build(Anthropometry::geyer_herr());
  ModelState s = m.standing_pose();
  s.q[dof::kY] -= 0.005;
  // Ground lowered by 1 cm everywhere from x = -1: the feet are now airborne.
  for (const ContactForce& c : ground_contact(m, s, Terrain::step_down(-1.0, 0.01), {})) {
    EXPECT_EQ(c.force.norm(), 0.0);
  }
}

TEST(Contact, SlotsFollowSideAndPoint) {
  EXPECT_EQ(contact_slot(Side::kLeft, ContactPoint::kHeel), 0);
  EXPECT_EQ(contact_slot(Side::kLeft, ContactPoint::kBall), 1);
  EXPECT_EQ(contact_slot(Side::kRight, ContactPoint::kHeel), 2);
  EXPECT_EQ(contact_slot(Side::kRight, ContactPoint::kBall), 3);
}
