#include <catch2/catch_amalgamated.hpp>

#include "veldt/config.hpp"

using namespace veldt;

TEST_CASE("defaults reproduce the published setup") {
    PipelineConfig cfg;
    CHECK(cfg.loss.omega == 25.0);
    CHECK(cfg.loss.lambda[0] == 1.0);
    CHECK(cfg.loss.lambda[1] == 0.7);
    CHECK(cfg.loss.lambda[2] == 0.5);
    CHECK(cfg.cluster.max_dist == 1.0);
    CHECK(cfg.cluster.min_points == 25);
    CHECK(cfg.cluster_min_points_oracle == 4);
    CHECK(cfg.cluster.min_radius == 0.5);
    CHECK(cfg.tracker.prune_tau == 0.001);
    CHECK(cfg.tracker.sigma_wv == 0.5);
    CHECK(cfg.tracker.sigma_wrho == 0.01);
    CHECK(cfg.tracker.sigma_xy == 0.9);
    CHECK(cfg.tracker.init_sigma[0] == 2.0);
    CHECK(cfg.tracker.init_sigma[2] == Catch::Approx(0.5 * kPi));
    CHECK(cfg.tracker.init_sigma[3] == 20.0);
    CHECK(cfg.tracker.init_sigma[4] == 0.2);
    CHECK(cfg.boxfit.k_c == 100.0);
    CHECK(cfg.projection.azimuth_res_deg == 0.18);
    CHECK(cfg.projection.width() == 451);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("empty config text parses to the defaults") {
    PipelineConfig parsed = parse_config_text("");
    PipelineConfig defaults;
    CHECK(serialize_config(parsed) == serialize_config(defaults));
}

TEST_CASE("values round trip through serialize/parse") {
    PipelineConfig cfg;
    cfg.loss.omega = 13.0;
    cfg.cluster.min_points = 11;
    cfg.tracker.prune_tau = 0.01;
    cfg.eval_include_trucks = false;
    cfg.seed = 777;
    const std::string text = serialize_config(cfg);
    PipelineConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.loss.omega == 13.0);
    CHECK(back.cluster.min_points == 11);
    CHECK(back.eval_include_trucks == false);
    CHECK(back.seed == 777);
}

TEST_CASE("sections and comments") {
    const std::string text =
        "# tuning\n"
        "[net]\n"
        "omega = 30 # heavier\n"
        "\n"
        "[cluster]\n"
        "max_dist = 1.5\n";
    PipelineConfig cfg = parse_config_text(text);
    CHECK(cfg.loss.omega == 30.0);
    CHECK(cfg.cluster.max_dist == 1.5);
    CHECK(cfg.cluster.min_points == 25);  // untouched default
}

TEST_CASE("field-level parse errors") {
    CHECK_THROWS_WITH(parse_config_text("[net]\nomega = heavy\n"),
                      Catch::Matchers::ContainsSubstring("net.omega"));
    CHECK_THROWS_WITH(parse_config_text("[net]\nunknown_knob = 1\n"),
                      Catch::Matchers::ContainsSubstring("unknown field"));
    CHECK_THROWS_WITH(parse_config_text("[net]\nnot a pair\n"),
                      Catch::Matchers::ContainsSubstring("expected key = value"));
}

TEST_CASE("validation rejects out-of-range values") {
    CHECK_THROWS_WITH(parse_config_text("[net]\nomega = -1\n"),
                      Catch::Matchers::ContainsSubstring("net.omega"));
    CHECK_THROWS_WITH(parse_config_text("[tracker]\nprune_tau = 2\n"),
                      Catch::Matchers::ContainsSubstring("prune_tau"));
    CHECK_THROWS_WITH(parse_config_text("[cluster]\nmin_points = 0\n"),
                      Catch::Matchers::ContainsSubstring("min_points"));
}
