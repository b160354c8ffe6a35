// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdpo/datasets.hpp"
#include "bdpo/errors.hpp"

using namespace bdpo;

namespace {

std::filesystem::path tmp_file(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "bdpo_data_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TEST_SUITE_BEGIN("datasets");

TEST_CASE("2d generators: bounds, determinism, float32 payloads") {
    for (const char* name : {"8gaussians", "2spirals", "moons"}) {
        const EnergyDataset a = gen_energy_dataset(name, 500, 9);
        const EnergyDataset b = gen_energy_dataset(name, 500, 9);
        const EnergyDataset c = gen_energy_dataset(name, 500, 10);
        REQUIRE(a.points.cols() == 500);
        REQUIRE(a.energy.size() == 500);
        CHECK(a.points == b.points);
        CHECK(a.energy == b.energy);
        CHECK(a.points != c.points);
        CHECK(a.points.cwiseAbs().maxCoeff() <= 4.5);
        CHECK(a.energy.allFinite());
        CHECK(!a.energy_spec.empty());
        CHECK(a.name == name);
        for (Eigen::Index i = 0; i < a.points.size(); ++i)
            CHECK(a.points(i) == f32(a.points(i)));
    }
    CHECK_THROWS_AS(gen_energy_dataset("circles", 10, 1), ConfigError);
    CHECK_THROWS(gen_energy_dataset("moons", 0, 1));
}

TEST_CASE("8gaussians concentrates on the eight ring modes") {
    const EnergyDataset ds = gen_energy_dataset("8gaussians", 4000, 5);
    const double radius = 3.5;
    int near = 0;
    for (Eigen::Index i = 0; i < ds.points.cols(); ++i) {
        double best = 1e9;
        for (int m = 0; m < 8; ++m) {
            const double ang = 2.0 * M_PI * m / 8.0;
            const double dx = ds.points(0, i) - radius * std::cos(ang);
            const double dy = ds.points(1, i) - radius * std::sin(ang);
            best = std::min(best, std::hypot(dx, dy));
        }
        if (best < 1.0) ++near;  // 4 sigmas of mode jitter
    }
    CHECK(near >= static_cast<int>(0.99 * ds.points.cols()));
}

TEST_CASE("dataset points score their own energy") {
    const EnergyDataset ds = gen_energy_dataset("2spirals", 300, 3);
    const Eigen::VectorXd back = nearest_dataset_energy(ds, ds.points);
    // stored points are their own nearest neighbors, up to exact ties
    int exact = 0;
    for (Eigen::Index i = 0; i < back.size(); ++i)
        if (back(i) == ds.energy(i)) ++exact;
    CHECK(exact >= static_cast<int>(0.99 * back.size()));
}

TEST_CASE("boltzmann weights: normalization, monotonicity, shift stability") {
    Eigen::VectorXd e(4);
    e << 0.0, 1.0, -1.0, 0.5;
    const Eigen::VectorXd w = boltzmann_weights(e, 0.5);
    CHECK(std::abs(w.sum() - 1.0) < 1e-14);
    CHECK(w.minCoeff() > 0.0);
    CHECK(w(1) > w(3));
    CHECK(w(3) > w(0));
    CHECK(w(0) > w(2));
    // exact ratio on a two-point subproblem: w1/w0 = exp((e1-e0)/eta)
    Eigen::VectorXd two(2);
    two << 0.0, 1.0;
    const Eigen::VectorXd w2 = boltzmann_weights(two, 1.0);
    CHECK(w2(1) / w2(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    Eigen::VectorXd huge(3);
    huge << 1e5, 1e5 + 1.0, 1e5 - 2.0;
    const Eigen::VectorXd wh = boltzmann_weights(huge, 1.0);
    CHECK(wh.allFinite());
    CHECK(std::abs(wh.sum() - 1.0) < 1e-14);

    // eta -> infinity flattens toward uniform
    const Eigen::VectorXd flat = boltzmann_weights(e, 1e9);
    CHECK((flat.array() - 0.25).abs().maxCoeff() < 1e-6);

    CHECK_THROWS(boltzmann_weights(e, 0.0));
    CHECK_THROWS(boltzmann_weights(e, -1.0));
    CHECK_THROWS(boltzmann_weights(Eigen::VectorXd(), 1.0));
    Eigen::VectorXd bad(2);
    bad << 1.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(boltzmann_weights(bad, 1.0), DataError);
}

TEST_CASE("target resampling draws dataset points with Boltzmann frequencies") {
    EnergyDataset ds;
    ds.name = "two-point";
    ds.points.resize(2, 2);
    ds.points << 0.0, 1.0, 0.0, 1.0;
    ds.energy.resize(2);
    ds.energy << 0.0, 1.0;

    Rng rng(21);
    const Eigen::MatrixXd draw = resample_target(ds, 0.1, 2000, rng);
    int high = 0;
    for (int i = 0; i < 2000; ++i) {
        const bool is_high = draw(0, i) == 1.0;
        const bool is_low = draw(0, i) == 0.0;
        CHECK((is_high || is_low));  // every sample is a dataset point
        if (is_high) ++high;
    }
    // weight ratio e^10: essentially every draw lands on the high mode
    CHECK(high >= 1990);

    Rng r1(4), r2(4);
    CHECK(resample_target(ds, 0.5, 64, r1) == resample_target(ds, 0.5, 64, r2));
}

TEST_CASE("bandit conversion wraps the point cloud as one-step transitions") {
    const EnergyDataset ds = gen_energy_dataset("moons", 200, 8);
    const OfflineDataset b = make_bandit_dataset(ds, 4.5);
    CHECK(b.state_dim == 0);
    CHECK(b.action_dim == 2);
    CHECK(b.size() == 200);
    CHECK(b.states.rows() == 0);
    CHECK(b.rewards == ds.energy);
    CHECK((b.dones.array() == 1.0).all());
    CHECK(b.actions.cwiseAbs().maxCoeff() <= 1.0);
    for (Eigen::Index i = 0; i < 20; ++i)
        CHECK(b.actions(0, i) == f32(ds.points(0, i) / 4.5));
    CHECK_THROWS(make_bandit_dataset(ds, 0.0));
}

TEST_CASE("energy dataset file round trip is exact") {
    const EnergyDataset ds = gen_energy_dataset("8gaussians", 333, 77);
    const auto path = tmp_file("energy.bin");
    save_energy_dataset(ds, path.string());
    const EnergyDataset back = load_energy_dataset(path.string());
    CHECK(back.name == ds.name);
    CHECK(back.seed == ds.seed);
    CHECK(back.energy_spec == ds.energy_spec);
    CHECK(back.points == ds.points);
    CHECK(back.energy == ds.energy);
}

TEST_CASE("offline dataset file round trip is exact") {
    const EnergyDataset e = gen_energy_dataset("moons", 120, 13);
    const OfflineDataset ds = make_bandit_dataset(e, 4.5);
    const auto path = tmp_file("offline.bin");
    save_offline_dataset(ds, path.string());
    const OfflineDataset back = load_offline_dataset(path.string());
    CHECK(back.state_dim == ds.state_dim);
    CHECK(back.action_dim == ds.action_dim);
    CHECK(back.actions == ds.actions);
    CHECK(back.rewards == ds.rewards);
    CHECK(back.dones == ds.dones);
    CHECK(back.name == ds.name);
    back.validate();
}

TEST_CASE("loader failure taxonomy") {
    CHECK_THROWS_AS(load_energy_dataset("/nonexistent/missing.bin"), DataError);

    const EnergyDataset ds = gen_energy_dataset("moons", 50, 1);
    const auto good = tmp_file("tax_good.bin");
    save_energy_dataset(ds, good.string());

    SUBCASE("corrupt header") {
        const auto bad = tmp_file("tax_header.bin");
        std::ofstream out(bad, std::ios::binary);
        out << "{ not json\n";
        out.close();
        CHECK_THROWS_AS(load_energy_dataset(bad.string()), CorruptHeaderError);
    }
    SUBCASE("kind mismatch") {
        // an energy file is not an offline file
        CHECK_THROWS_AS(load_offline_dataset(good.string()), DimMismatchError);
    }
    SUBCASE("truncated payload") {
        const auto bad = tmp_file("tax_trunc.bin");
        std::filesystem::copy_file(good, bad, std::filesystem::copy_options::overwrite_existing);
        std::filesystem::resize_file(bad, std::filesystem::file_size(bad) - 7);
        CHECK_THROWS_AS(load_energy_dataset(bad.string()), TruncationError);
    }
    SUBCASE("trailing bytes") {
        const auto bad = tmp_file("tax_trail.bin");
        std::filesystem::copy_file(good, bad, std::filesystem::copy_options::overwrite_existing);
        std::ofstream app(bad, std::ios::binary | std::ios::app);
        app << "xtra";
        app.close();
        CHECK_THROWS_AS(load_energy_dataset(bad.string()), TruncationError);
    }
}

TEST_CASE("offline validation rejects malformed tables") {
    const EnergyDataset e = gen_energy_dataset("moons", 30, 2);
    OfflineDataset ds = make_bandit_dataset(e, 4.5);

    OfflineDataset wrong_cols = ds;
    wrong_cols.rewards.conservativeResize(10);
    CHECK_THROWS_AS(wrong_cols.validate(), DimMismatchError);

    OfflineDataset bad_done = ds;
    bad_done.dones(3) = 0.5;
    CHECK_THROWS_AS(bad_done.validate(), DataError);

    OfflineDataset big_action = ds;
    big_action.actions(0, 0) = 1.5;
    CHECK_THROWS_AS(big_action.validate(), DataError);
}

TEST_SUITE_END();
