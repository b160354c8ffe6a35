// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bdpo/checkpoint.hpp"
#include "bdpo/errors.hpp"
#include "bdpo/rng.hpp"

using namespace bdpo;

namespace {

std::filesystem::path tmp_file(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "bdpo_ckpt_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("arrays round-trip bit exact with meta intact") {
    Checkpoint ck;
    ck.meta["kind"] = "probe";
    ck.meta["nested"] = {{"a", 1}, {"b", "two"}};
    Rng rng(3);
    Eigen::MatrixXd buf(1, 257);
    rng.fill_normal(buf);
    ck.add("first", buf.row(0).transpose());
    ck.add("second", Eigen::Vector3d(0.1, -0.0, 1e-300));

    const auto path = tmp_file("roundtrip.ckpt");
    ck.save(path.string());
    const Checkpoint back = Checkpoint::load(path.string());

    CHECK(back.meta.at("kind") == "probe");
    CHECK(back.meta.at("nested").at("b") == "two");
    REQUIRE(back.has("first"));
    REQUIRE(back.has("second"));
    CHECK(back.get("first") == ck.get("first"));
    CHECK(back.get("second") == ck.get("second"));
    CHECK(back.arrays.size() == 2);
    CHECK(back.arrays[0].first == "first");  // insertion order preserved
}

TEST_CASE("duplicate and missing array names are rejected") {
    Checkpoint ck;
    ck.add("x", Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(ck.add("x", Eigen::VectorXd::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(ck.get("absent"), DataError);
    CHECK(!ck.has("absent"));
}

TEST_CASE("mlp round trip restores the exact parameters") {
    Rng rng(17);
    const Mlp net = Mlp::make({4, 9, 3}, rng);
    Checkpoint ck;
    checkpoint_put_mlp(ck, "net", net);

    // on-disk weights are transposed per block; the payload must differ from
    // the in-memory layout for a non-square layer
    CHECK(ck.get("net.params") != net.params);

    const auto path = tmp_file("mlp.ckpt");
    ck.save(path.string());
    const Mlp back = checkpoint_take_mlp(Checkpoint::load(path.string()), "net");
    CHECK(back.widths == net.widths);
    CHECK(back.params == net.params);
}

TEST_CASE("adam and ema round trips preserve optimizer state") {
    Rng rng(29);
    Mlp net = Mlp::make({2, 5, 1}, rng);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    cfg.cosine_horizon = 10;
    AdamState st(cfg, net.param_count());
    for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd g(net.param_count());
        Eigen::MatrixXd gm(net.param_count(), 1);
        rng.fill_normal(gm);
        g = gm.col(0);
        st.apply(net.params, g);
    }
    EmaTracker ema(0.01, net.params);
    ema.update(2.0 * net.params);

    Checkpoint ck;
    checkpoint_put_adam(ck, "opt", st, net.widths);
    checkpoint_put_ema(ck, "ema", ema, net.widths);
    const auto path = tmp_file("opt.ckpt");
    ck.save(path.string());
    const Checkpoint back = Checkpoint::load(path.string());

    const AdamState st2 = checkpoint_take_adam(back, "opt", net.widths);
    CHECK(st2.step == st.step);
    CHECK(st2.m == st.m);
    CHECK(st2.v == st.v);
    CHECK(st2.cfg.lr == st.cfg.lr);
    CHECK(st2.cfg.cosine_horizon == st.cfg.cosine_horizon);

    const EmaTracker ema2 = checkpoint_take_ema(back, "ema", net.widths);
    CHECK(ema2.shadow == ema.shadow);
}

TEST_CASE("loader failure taxonomy") {
    CHECK_THROWS_AS(Checkpoint::load("/nonexistent/nowhere.ckpt"), DataError);

    const auto good = tmp_file("good.ckpt");
    Checkpoint ck;
    ck.add("x", Eigen::VectorXd::LinSpaced(64, 0.0, 1.0));
    ck.save(good.string());

    SUBCASE("garbage header") {
        const auto bad = tmp_file("bad_header.ckpt");
        std::ofstream out(bad, std::ios::binary);
        out << "definitely not json\n";
        out.close();
        CHECK_THROWS_AS(Checkpoint::load(bad.string()), CorruptHeaderError);
    }
    SUBCASE("wrong magic") {
        const auto bad = tmp_file("bad_magic.ckpt");
        std::ofstream out(bad, std::ios::binary);
        out << R"({"magic":"other","version":1,"arrays":[]})" << "\n";
        out.close();
        CHECK_THROWS_AS(Checkpoint::load(bad.string()), CorruptHeaderError);
    }
    SUBCASE("truncated payload") {
        const auto bad = tmp_file("truncated.ckpt");
        std::filesystem::copy_file(good, bad, std::filesystem::copy_options::overwrite_existing);
        const auto full = std::filesystem::file_size(bad);
        std::filesystem::resize_file(bad, full - 16);
        CHECK_THROWS_AS(Checkpoint::load(bad.string()), TruncationError);
    }
}

TEST_SUITE_END();
