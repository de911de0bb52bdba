#include <catch2/catch_amalgamated.hpp>

#include "mmplan/io.hpp"
#include "mmplan/workload.hpp"

using namespace mmplan;

TEST_CASE("layer_ops matches the definitional count") {
  CHECK(layer_ops({0, 3072, 1024, 4096, 1, 1}) == Catch::Approx(2.5769803776e10).epsilon(1e-12));
  CHECK(layer_ops({0, 512, 64, 512, 96, 1}) == Catch::Approx(3.221225472e9).epsilon(1e-12));
  CHECK(layer_ops({0, 1, 1, 1, 1, 1}) == 2.0);
}

TEST_CASE("layer_ops is multiplicative in batch and count and symmetric in m/n") {
  const LayerShape base{0, 123, 45, 67, 1, 1};
  LayerShape batched = base;
  batched.batch = 7;
  LayerShape counted = base;
  counted.count = 5;
  CHECK(layer_ops(batched) == 7.0 * layer_ops(base));
  CHECK(layer_ops(counted) == 5.0 * layer_ops(base));
  LayerShape swapped = base;
  std::swap(swapped.m, swapped.n);
  CHECK(layer_ops(swapped) == layer_ops(base));
}

TEST_CASE("bert batch-dot share of operations is one thirteenth") {
  const ModelSpec bert = builtin_model("bert");
  REQUIRE(bert.layers.size() == 5);
  const double small = layer_ops(bert.layers[3]) + layer_ops(bert.layers[4]);
  const double frac = small / total_ops(bert);
  CHECK(frac == Catch::Approx(1.0 / 13.0).epsilon(1e-12));   // 7.69%
  CHECK(std::round(frac * 100.0) == 8.0);                    // published rounding
}

TEST_CASE("builtin bert carries the expected shapes, kernels, and edges") {
  const ModelSpec bert = builtin_model("bert");
  CHECK(bert.layers[0] == LayerShape{0, 3072, 1024, 1024, 1, 4});
  CHECK(bert.layers[1] == LayerShape{1, 3072, 4096, 1024, 1, 1});
  CHECK(bert.layers[2] == LayerShape{2, 3072, 1024, 4096, 1, 1});
  CHECK(bert.layers[3] == LayerShape{3, 512, 64, 512, 96, 1});
  CHECK(bert.layers[4] == LayerShape{4, 512, 512, 64, 96, 1});
  CHECK(bert.kernel_count() == 8);
  // Kernels 0-3 expand from the count=4 row; 6 and 7 are the batch dots.
  CHECK(bert.kernel_layer(0) == 0);
  CHECK(bert.kernel_layer(3) == 0);
  CHECK(bert.kernel_layer(4) == 1);
  CHECK(bert.kernel_layer(5) == 2);
  CHECK(bert.kernel_layer(6) == 3);
  CHECK(bert.kernel_layer(7) == 4);
  const DependencyGraph expected{{{0, 6}, {1, 6}, {6, 7}, {2, 7}, {7, 3}, {3, 4}, {4, 5}}};
  CHECK(bert.deps == expected);
  CHECK(bert.fixed_time_s() == Catch::Approx(28.4e-3));
}

TEST_CASE("builtin ncf has nine single-batch layers with halving K") {
  const ModelSpec ncf = builtin_model("ncf");
  REQUIRE(ncf.layers.size() == 9);
  for (const auto& l : ncf.layers) CHECK(l.batch == 1);
  CHECK(ncf.layers.front().k == 4096);
  CHECK(ncf.layers[7].k == 32);
  CHECK(ncf.layers.back().n == 1);
  CHECK(ncf.kernel_count() == 9);
}

TEST_CASE("builtin vit and mlp expand counts into chain kernels") {
  const ModelSpec vit = builtin_model("vit");
  CHECK(vit.layers.size() == 6);
  CHECK(vit.kernel_count() == 7);
  CHECK(vit.deps.edges.size() == 6);
  const ModelSpec mlp = builtin_model("mlp");
  CHECK(mlp.kernel_count() == 4);
}

TEST_CASE("unknown model names are rejected") {
  CHECK_THROWS_AS(builtin_model("gpt"), ValidationError);
}

TEST_CASE("validate_graph accepts bert edges and rejects bad graphs") {
  const ModelSpec bert = builtin_model("bert");
  CHECK_NOTHROW(validate_graph(bert.deps, 8));
  CHECK_THROWS_AS(validate_graph({{{0, 0}}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_graph({{{0, 1}, {1, 0}}}, 2), ValidationError);
  CHECK_THROWS_AS(validate_graph({{{0, 5}}}, 2), ValidationError);
  CHECK_THROWS_WITH(validate_graph({{{0, 1}, {1, 2}, {2, 0}}}, 3),
                    Catch::Matchers::ContainsSubstring("cycle"));
}

TEST_CASE("builtin models round-trip through the file format losslessly") {
  for (const char* name : {"bert", "vit", "ncf", "mlp"}) {
    const ModelSpec original = builtin_model(name);
    const ModelSpec reloaded = load_model(save_model(original));
    CHECK(reloaded.name == original.name);
    CHECK(reloaded.layers == original.layers);
    CHECK(reloaded.deps == original.deps);
    CHECK(reloaded.fixed_kernels == original.fixed_kernels);
  }
}

TEST_CASE("model loader rejects unknown fields and bad layers") {
  CHECK_THROWS_AS(load_model(R"({"name":"x","layers":[{"m":1,"k":1,"n":1}],"typo":1})"), ParseError);
  CHECK_THROWS_AS(load_model(R"({"name":"x","layers":[{"m":0,"k":1,"n":1}]})"), ValidationError);
  CHECK_THROWS_AS(load_model(R"({"name":"x"})"), ParseError);
  const ModelSpec m = load_model(R"({"name":"tiny","layers":[{"m":8,"k":8,"n":8}]})");
  CHECK(m.layers.size() == 1);
  CHECK(m.layers[0].batch == 1);
}
