#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "pdgan/config.hpp"

using namespace pdgan;

TEST_CASE("defaults validate and serialization is canonical") {
  RunConfig c;
  c.validate();
  const std::string text = serialize_config(c);
  RunConfig back = parse_config_text(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);

  CHECK(text.find("seed=1\n") == 0);
  CHECK(text.find("stage-channels=96,64,48,32,16\n") != std::string::npos);
  CHECK(text.find("n-schedule=2,2,4,4,4\n") != std::string::npos);
  CHECK(text.find("pdiv=on\n") != std::string::npos);
  CHECK(text.find("pdiv-gate=hole\n") != std::string::npos);
  CHECK(text.find("lr=1e-04\n") != std::string::npos);
  CHECK(text.find("beta2=0.99\n") != std::string::npos);
  CHECK(text.find("buckets=10-20,20-30,30-40,40-50\n") != std::string::npos);
  CHECK(text.find("out=./run\n") != std::string::npos);
}

TEST_CASE("non-default values survive the round trip bit for bit") {
  RunConfig c;
  c.seed = 987654321;
  c.image_size = 32;
  c.stage_channels = {24, 16, 12};
  c.n_schedule = {1, 2, 3};
  c.k = 2.5;
  c.lr = 3.0e-5;
  c.pdiv = PdivMode::Cdl;
  c.pdiv_gate = DiversityGate::Background;
  c.buckets = {RatioBucket::R30_40};
  c.out = "runs/exp-07";
  RunConfig back = parse_config_text(serialize_config(c));
  CHECK(back == c);
  CHECK(back.lr == c.lr);
  CHECK(back.k == c.k);
}

TEST_CASE("partial configs override defaults only where present") {
  RunConfig c = parse_config_text("iters=12\nbatch=2\n\n# comment\nout=scratch\n");
  CHECK(c.iters == 12);
  CHECK(c.batch == 2);
  CHECK(c.out == "scratch");
  CHECK(c.seed == 1);
  CHECK(c.latent_dim == 128);
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS_AS(parse_config_text("mystery-key=3\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("iters=12\niters=13\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("iters=twelve\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("lr=1e\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("stage-channels=96,\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("pdiv=maybe\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("pdiv-gate=rim\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("buckets=15-25\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("seed=-4\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config_text("out=\n"), ArgumentError);
}

TEST_CASE("validate rejects out-of-range settings") {
  auto broken = [](void (*mut)(RunConfig&)) {
    RunConfig c;
    mut(c);
    return c;
  };
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.batch = 0; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.lr = 0; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.beta2 = 1.0; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.ttur = -1; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.topk = 0; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.buckets.clear(); }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.image_size = 24; }).validate(), ArgumentError);
  CHECK_THROWS_AS(broken([](RunConfig& c) { c.stage_channels = {8}; }).validate(), Error);
  CHECK_NOTHROW(broken([](RunConfig& c) {
                  c.image_size = 32;
                  c.stage_channels = {24, 16, 12, 8};
                  c.n_schedule = {2, 2, 4, 4};
                }).validate());
}

TEST_CASE("generator and loss configs mirror the run settings") {
  RunConfig c;
  c.image_size = 32;
  c.stage_channels = {24, 16, 12, 8};
  c.n_schedule = {1, 2, 3, 4};
  c.w_fm = 7.0;
  c.eps_div = 1e-4;
  GeneratorConfig g = c.generator_config();
  CHECK(g.out_h == 32);
  CHECK(g.stage_channels == c.stage_channels);
  CHECK(g.n_schedule == c.n_schedule);
  CHECK(g.latent_dim == c.latent_dim);
  LossWeights w = c.loss_weights();
  CHECK(w.w_fm == 7.0);
  CHECK(w.epsilon_div == 1e-4);
}

TEST_CASE("config files and overrides") {
  RunConfig c;
  c.iters = 77;
  write_config_file("cfg_scratch.txt", c);
  RunConfig back = read_config_file("cfg_scratch.txt");
  CHECK(back == c);
  std::remove("cfg_scratch.txt");
  CHECK_THROWS_AS(read_config_file("cfg_scratch.txt"), ArgumentError);

  apply_config_override(back, "topk=3");
  CHECK(back.topk == 3);
  CHECK_THROWS_AS(apply_config_override(back, "topk"), ArgumentError);
  CHECK_THROWS_AS(apply_config_override(back, "phase=7"), ArgumentError);
}

TEST_CASE("mode and gate names round trip") {
  for (PdivMode m : {PdivMode::On, PdivMode::Off, PdivMode::Cdl})
    CHECK(pdiv_mode_from_name(pdiv_mode_name(m)) == m);
  for (DiversityGate g : {DiversityGate::Hole, DiversityGate::Background})
    CHECK(diversity_gate_from_name(diversity_gate_name(g)) == g);
}
