#include <gtest/gtest.h>

#include "cpsr/config.hpp"

using namespace cpsr;

TEST(ParseConfig, DefaultsWithDataDirFlag) {
    const auto c = parse_config("", {{"data_dir", "data/x"}});
    EXPECT_EQ(c.data_dir, "data/x");
    EXPECT_EQ(c.resolved_ind_dir(), "data/x_ind");
    EXPECT_EQ(c.train.dim, 64u);
    EXPECT_EQ(c.train.mask.p_tau, 0.5);
    EXPECT_EQ(c.train.mask.p_e, 0.5);
    EXPECT_EQ(c.train.reasoner.hops, 3u);
    EXPECT_EQ(c.train.reasoner.top_k, 150u);
    EXPECT_EQ(c.train.batch_size, 100u);
    EXPECT_EQ(c.train.adam.lr, 5e-4);
    EXPECT_EQ(c.workers, 1);
    EXPECT_TRUE(c.train.eval_mask);
    EXPECT_TRUE(c.self_loop);
    EXPECT_TRUE(c.inverse);
    EXPECT_FALSE(c.train.reasoner.rectifier);
    EXPECT_EQ(c.resolved_checkpoint(), c.out_dir / "best.ckpt");
}

TEST(ParseConfig, OverrideBeatsFile) {
    const auto c = parse_config("data_dir = d\nL = 3\n", {{"L", "7"}});
    EXPECT_EQ(c.train.reasoner.hops, 7u);
    EXPECT_EQ(parse_config("data_dir = d\nL = 3\n").train.reasoner.hops, 3u);
}

TEST(ParseConfig, CommentsAndBlankLines) {
    const auto c = parse_config("# run\n\ndata_dir = d   # inline\n  K = all\n");
    EXPECT_EQ(c.data_dir, "d");
    EXPECT_EQ(c.train.reasoner.top_k, ReasonerConfig::kUnlimited);
}

TEST(ParseConfig, Presets) {
    const auto c = parse_config("data_dir = d\npreset = wn18rr_v1\n");
    EXPECT_EQ(c.train.reasoner.hops, 3u);
    EXPECT_EQ(c.train.reasoner.top_k, 150u);
    EXPECT_EQ(c.train.mask.p_e, 0.5);
    EXPECT_EQ(c.train.mask.p_tau, 0.5);
    EXPECT_EQ(c.train.batch_size, 100u);

    const auto f = parse_config("data_dir = d\npreset = fb237_v4\n");
    EXPECT_EQ(f.train.reasoner.hops, 5u);
    EXPECT_EQ(f.train.reasoner.top_k, 300u);
    EXPECT_EQ(f.train.mask.p_e, 0.4);
    EXPECT_EQ(f.train.batch_size, 20u);

    // Explicit keys beat the preset wherever they appear.
    const auto o = parse_config("K = 7\npreset = wn18rr_v2\n", {{"data_dir", "d"}});
    EXPECT_EQ(o.train.reasoner.top_k, 7u);
    EXPECT_EQ(o.train.batch_size, 50u);
    EXPECT_EQ(preset_names().size(), 8u);
}

TEST(ParseConfig, EnvironmentSeedIsLastResort) {
    EXPECT_EQ(parse_config("data_dir = d\n", {}, "123").train.seed, 123u);
    EXPECT_EQ(parse_config("data_dir = d\n", {}, "123").train.mask.seed, 123u);
    EXPECT_EQ(parse_config("data_dir = d\nseed = 5\n", {}, "123").train.seed, 5u);
    EXPECT_EQ(parse_config("data_dir = d\n", {{"seed", "6"}}, "123").train.seed, 6u);
    EXPECT_EQ(parse_config("data_dir = d\n").train.seed, 42u);
}

TEST(ParseConfig, ErrorsNameTheKey) {
    auto key_of = [](const std::string& text, const Overrides& o = {}) {
        try {
            parse_config(text, o);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(key_of("data_dir = d\nbogus = 1\n"), "bogus");
    EXPECT_EQ(key_of("data_dir = d\n", {{"wat", "1"}}), "wat");
    EXPECT_EQ(key_of("data_dir = d\nL = three\n"), "L");
    EXPECT_EQ(key_of("data_dir = d\nlr = 1e-3x\n"), "lr");
    EXPECT_EQ(key_of("data_dir = d\neval_mask = maybe\n"), "eval_mask");
    EXPECT_EQ(key_of("data_dir = d\npreset = nope\n"), "preset");
    EXPECT_EQ(key_of("L = 3\n"), "data_dir");
    EXPECT_EQ(key_of("data_dir = d\nK = 0\n"), "K");
    EXPECT_EQ(key_of("data_dir = d\njust words\n"), "just words");
    EXPECT_THROW(parse_config("data_dir = d\np_e = 1.5\n"), ConfigError);
    EXPECT_NO_THROW(parse_config("L = 3\n", {}, std::nullopt, false));
}

TEST(ParseConfig, ResolvedTextRoundTrips) {
    const auto c = parse_config(
        "data_dir = d\npreset = fb237_v2\nlr = 0.00123\np_e = 0.1\nmask_resample = fixed\nscore_agg = sum\n"
        "sweep_values = 0.2, 0.4\nK = all\nshared_mix = on\n",
        {{"seed", "77"}});
    const auto again = parse_config(c.to_text());
    EXPECT_EQ(again.to_text(), c.to_text());
    EXPECT_EQ(again.train.adam.lr, 0.00123);
    EXPECT_FALSE(again.train.resample_mask_per_epoch);
    EXPECT_EQ(again.train.reasoner.score_agg, ScoreAgg::Sum);
    EXPECT_EQ(again.sweep_values, (std::vector<double>{0.2, 0.4}));
    EXPECT_EQ(again.train.seed, 77u);
    EXPECT_TRUE(again.train.shared_mix);
}

TEST(ParseConfig, EveryKeyIsDocumented) {
    for (const auto& k : config_keys()) EXPECT_FALSE(k.description.empty()) << k.name;
}
