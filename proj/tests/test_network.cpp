#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "cosserat/network.hpp"
#include "test_support.hpp"

using namespace cosserat;
using namespace cosserat::testing;

namespace {

CaseSetup pi3_case()
{
  CaseSetup c;
  c.phi0 = std::numbers::pi / 3;
  return c;
}

NetworkParams with_random_biases(NetworkParams net)
{
  for (auto& l : net.layers)
    l.b.setRandom();
  return net;
}

} // namespace

TEST(Network, StandardArchitecture)
{
  EXPECT_EQ(standard_architecture(2), (std::vector<std::size_t>{2, 64, 64, 64, 2}));
  const NetworkParams net = init_params(0, 1);
  EXPECT_EQ(net.input_dim(), 2u);
  EXPECT_EQ(net.output_dim(), 1u);
  EXPECT_EQ(net.layers.size(), 4u);
  EXPECT_THROW(init_params(0, std::vector<std::size_t>{2}), ShapeMismatch);
}

TEST(Network, InitialisationIsDeterministic)
{
  EXPECT_TRUE(init_params(42, 2) == init_params(42, 2));
  EXPECT_FALSE(init_params(42, 2) == init_params(43, 2));
  for (const auto& l : init_params(42, 2).layers)
    EXPECT_EQ(l.b.norm(), 0.0);
}

TEST(Network, InitialisationScale)
{
  const NetworkParams net = init_params(9, 2);
  const auto& W = net.layers[1].W;
  const double var = W.squaredNorm() / static_cast<double>(W.size());
  EXPECT_NEAR(var, 1.0 / 64.0, 0.1 / 64.0);
}

TEST(Network, AnsatzExample)
{
  const CaseSetup c = pi3_case();
  const DisplacementSample u = displacement_ansatz(c, {0.5, 0.1}, {1.0, 2.0}, Mat2{});
  EXPECT_DOUBLE_EQ(u.u.x, 0.05 + 0.25);
  EXPECT_DOUBLE_EQ(u.u.y, 0.5);
  EXPECT_DOUBLE_EQ(u.gradu(0, 0), 0.1);
  EXPECT_EQ(u.gradu(1, 0), 0.0);

  const DirectorSample d = director_ansatz(c, {0.5, 0.1}, 0.2, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(d.phi, c.phi0 + 0.1);
  EXPECT_DOUBLE_EQ(d.gradphi.x, 0.2);
  EXPECT_NEAR(norm(d.d), 1.0, 1e-15);
}

TEST(Network, ZeroNetworksGiveHomogeneousRamp)
{
  const CaseSetup c = pi3_case();
  const NetworkParams U = zero_params(2), P = zero_params(1);
  for (const Vec2 X : {Vec2{0.0, 0.0}, Vec2{0.3, 0.1}, Vec2{1.0, 0.2}}) {
    const auto u = displacement(U, c, X);
    EXPECT_DOUBLE_EQ(u.u.x, 0.1 * X.x);
    EXPECT_EQ(u.u.y, 0.0);
    EXPECT_EQ(u.gradu, (Mat2{0.1, 0, 0, 0}));
    const auto d = director(P, c, X);
    EXPECT_EQ(d.phi, c.phi0);
    EXPECT_EQ(d.gradd, Mat2{});
  }
}

TEST(Network, BoundaryConditionsAreExact)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CaseSetup c = pi3_case();
    c.delta_L = 0.1 * static_cast<double>(seed);
    const NetworkParams U = with_random_biases(init_params(seed, 2));
    const NetworkParams P = with_random_biases(init_params(seed + 100, 1));
    for (int k = 0; k <= 20; ++k) {
      const double Y = c.W * k / 20.0;
      const auto left = displacement(U, c, {0.0, Y});
      const auto right = displacement(U, c, {c.L, Y});
      EXPECT_LE(norm(left.u), 1e-14);
      EXPECT_LE(norm(right.u - Vec2{c.delta_L, 0.0}), 1e-14);
      EXPECT_LE(std::abs(director(P, c, {0.0, Y}).phi - c.phi0), 1e-14);
    }
  }
}

TEST(Network, GradientsMatchFiniteDifferences)
{
  const CaseSetup c = pi3_case();
  const NetworkParams U = with_random_biases(init_params(4, 2)), P = with_random_biases(init_params(5, 1));
  const double h = 1e-6;
  for (const Vec2 X : {Vec2{0.2, 0.05}, Vec2{0.5, 0.1}, Vec2{0.9, 0.15}}) {
    const auto u = displacement(U, c, X);
    const auto d = director(P, c, X);
    Mat2 Gu, Gd;
    for (int a = 0; a < 2; ++a) {
      Vec2 p = X, m = X;
      p[a] += h;
      m[a] -= h;
      const Vec2 du = (displacement(U, c, p).u - displacement(U, c, m).u) * (0.5 / h);
      const Vec2 dd = (director(P, c, p).d - director(P, c, m).d) * (0.5 / h);
      for (int i = 0; i < 2; ++i) {
        Gu(i, a) = du[i];
        Gd(i, a) = dd[i];
      }
    }
    EXPECT_LE(rel_err(u.gradu, Gu), 1e-7);
    EXPECT_LE(rel_err(d.gradd, Gd), 1e-7);
  }
}

TEST(Network, OutOfDomain)
{
  const CaseSetup c = pi3_case();
  const NetworkParams U = init_params(1, 2), P = init_params(2, 1);
  EXPECT_THROW(displacement(U, c, {-0.01, 0.1}), OutOfDomain);
  EXPECT_THROW(displacement(U, c, {0.5, 0.21}), OutOfDomain);
  EXPECT_THROW(director(P, c, {1.5, 0.1}), OutOfDomain);
  EXPECT_NO_THROW(director(P, c, {1.0, 0.2}));
}

TEST(Network, WrongOutputCount)
{
  const CaseSetup c = pi3_case();
  EXPECT_THROW(displacement(init_params(1, 1), c, {0.5, 0.1}), ShapeMismatch);
  EXPECT_THROW(director(init_params(1, 2), c, {0.5, 0.1}), ShapeMismatch);
}

TEST(Network, CheckpointRoundTripIsBitwise)
{
  const std::string path = ::testing::TempDir() + "/cosserat_checkpoint.json";
  Checkpoint a{"deformation", 77, pi3_case(), with_random_biases(init_params(77, 2))};
  a.net.layers[0].W(0, 0) = 0.1 + 0.2;
  save_checkpoint(a, path);
  const Checkpoint b = load_checkpoint(path);
  EXPECT_EQ(b.role, a.role);
  EXPECT_EQ(b.seed, a.seed);
  EXPECT_EQ(b.setup.phi0, a.setup.phi0);
  EXPECT_TRUE(b.net == a.net);
  std::filesystem::remove(path);
}

TEST(Network, CorruptCheckpointsAreRejected)
{
  const std::string path = ::testing::TempDir() + "/cosserat_bad_checkpoint.json";
  EXPECT_THROW(load_checkpoint(path + ".missing"), IoError);
  {
    std::ofstream(path) << "{not json";
  }
  EXPECT_THROW(load_checkpoint(path), IoError);

  nlohmann::json j = checkpoint_to_json({"director", 1, pi3_case(), init_params(1, 1)});
  j["parameters"].erase(0);
  EXPECT_THROW(checkpoint_from_json(j), IoError);
  j = checkpoint_to_json({"director", 1, pi3_case(), init_params(1, 1)});
  j["version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), IoError);
  std::filesystem::remove(path);
}
