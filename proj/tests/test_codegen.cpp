#include <cstdlib>

#include "doctest.h"
#include "fuseplan/codegen.hpp"
#include "fuseplan/config.hpp"
#include "helpers.hpp"
#include "tap_check.hpp"

using namespace fuseplan;
using namespace fuseplan::test;

namespace {

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t p = text.find(needle); p != std::string::npos;
       p = text.find(needle, p + needle.size()))
    ++n;
  return n;
}

std::vector<KernelDesc> group_of(
    const std::vector<std::pair<std::string, StencilParams>>& ops) {
  std::vector<KernelDesc> ks;
  int id = 0;
  for (const auto& [op, params] : ops) ks.push_back(make_kernel(++id, op, params));
  return ks;
}

}  // namespace

TEST_CASE("access rewriting folds the halo pad into the displacement") {
  Halo h{2, 2, 2, 2, 0, 0};
  CHECK(rewrite_access("in[i+ii, j+jj, k+kk]", h) ==
        "staged[thx+ii+2, thy+jj+2, tht+kk]");
  CHECK(rewrite_access("in[i+ii+1, j+jj-1, k+kk]", h) ==
        "staged[thx+ii+3, thy+jj+1, tht+kk]");
  CHECK(rewrite_access("in[i+ii-2, j+jj, k+kk+1]", h) ==
        "staged[thx+ii, thy+jj+2, tht+kk+1]");
  CHECK(rewrite_access("in[i+ii, j+jj]", Halo{}) == "staged[thx+ii, thy+jj]");
  CHECK(rewrite_access("buf[i + ii, j + jj + 3, k + kk]", Halo{},
                       "other") == "other[thx+ii, thy+jj+3, tht+kk]");
}

TEST_CASE("access rewriting rejects non-canonical forms") {
  for (const char* bad :
       {"in[x, y]", "in[i+ii*2, j+jj, k+kk]", "no_brackets",
        "in[i+ii]", "in[i+ii, j+jj, k+kk, c]", "in[ii+i, j+jj, k+kk]",
        "in[i+ii+, j+jj, k+kk]"}) {
    try {
      rewrite_access(bad, Halo{});
      FAIL("expected rejection of: ", bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Input);
      CHECK(std::string(e.what()).find("non-canonical") != std::string::npos);
    }
  }
}

TEST_CASE("point-op pair: single barrier, in-place staging") {
  auto ks = group_of({{"rgba2gray", {}}, {"threshold", {{"th", 128.0}}}});
  Halo h = fused_halo(ks, HaloMode::Cumulative);
  CHECK(h.zero());
  EmittedKernel ek =
      generate_fused_source(ks, TileShape{8, 8, 2}, h, make_device(), "pp");
  CHECK(ek.sync_points == std::vector<int>{-1});
  CHECK(ek.staged_arrays == 1);
  CHECK(count_occurrences(ek.source_text, "__syncthreads()") == 1);
  CHECK(ek.source_text.find("staged_b") == std::string::npos);
  CHECK(ek.staged_buffer_elems == 8 * 8 * 2);

  // Member bodies appear in pipeline order, write-back last.
  auto p1 = ek.source_text.find("K1 rgba2gray body");
  auto p2 = ek.source_text.find("K2 threshold body");
  auto p3 = ek.source_text.find("write back");
  REQUIRE(p1 != std::string::npos);
  REQUIRE(p2 != std::string::npos);
  REQUIRE(p3 != std::string::npos);
  CHECK(p1 < p2);
  CHECK(p2 < p3);
}

TEST_CASE("stencil consumer inserts a barrier and ping-pongs the buffer") {
  auto ks = group_of(
      {{"rgba2gray", {}}, {"gaussian", {{"radius", 2}, {"sigma", 1.0}}}});
  Halo h = fused_halo(ks, HaloMode::Cumulative);
  CHECK(h == Halo::symmetric(2, 2, 0));
  EmittedKernel ek =
      generate_fused_source(ks, TileShape{8, 8, 2}, h, make_device(), "sg");
  CHECK(ek.sync_points == std::vector<int>{-1, 0});
  CHECK(ek.staged_arrays == 2);
  CHECK(count_occurrences(ek.source_text, "__syncthreads()") == 2);
  CHECK(ek.source_text.find("__shared__ float staged_b") != std::string::npos);
  CHECK(ek.staged_buffer_elems == 12 * 12 * 2);

  // The barrier sits between the two member bodies.
  auto p1 = ek.source_text.find("K1 rgba2gray body");
  auto p2 = ek.source_text.find("K2 gaussian body");
  auto sync = ek.source_text.rfind("__syncthreads()");
  CHECK(p1 < sync);
  CHECK(sync < p2);
}

TEST_CASE("recurrence member emits a causal scan") {
  auto ks = group_of({{"identity", {}}, {"iir_temporal", {{"alpha", 0.25}}}});
  EmittedKernel ek = generate_fused_source(ks, TileShape{4, 4, 8}, Halo{},
                                           make_device(), "iir");
  CHECK(ek.source_text.find("prev = (kk == 0) ? cur : (0.25f * cur + 0.75f * "
                            "prev);") != std::string::npos);
  // No barrier before the IIR: it is a TT consumer.
  CHECK(ek.sync_points == std::vector<int>{-1});
}

TEST_CASE("every staged tap stays inside the staged extents") {
  Device big = make_device(std::int64_t(1) << 22);
  std::vector<std::vector<std::pair<std::string, StencilParams>>> chains = {
      {{"rgba2gray", {}}, {"gaussian", {{"radius", 2}, {"sigma", 1.0}}}},
      {{"gaussian", {{"radius", 1}, {"sigma", 1.0}}},
       {"gradient", {}},
       {"box_mean", {{"radius_x", 1}, {"radius_y", 1}, {"radius_t", 1}}}},
      {{"iir_temporal", {{"alpha", 0.5}}},
       {"gaussian", {{"radius", 2}, {"sigma", 1.0}}},
       {"threshold", {{"th", 64.0}}}},
  };
  for (const auto& chain : chains) {
    auto ks = group_of(chain);
    Halo h = fused_halo(ks, HaloMode::Cumulative);
    for (int x = 1; x <= 16; ++x)
      for (int t = 1; t <= 4; ++t) {
        EmittedKernel ek = generate_fused_source(ks, TileShape{x, x, t}, h,
                                                 big, "probe");
        TapCheckResult tc = check_tap_containment(ek.source_text);
        CHECK(tc.accesses > 0);
        if (tc.violations != 0) {
          FAIL_CHECK("tile ", x, "x", x, "x", t, " violates containment: ",
                     tc.first_violation);
        }
      }
  }
}

TEST_CASE("staged box beyond SHMEM is rejected") {
  auto ks = group_of({{"rgba2gray", {}}});
  try {
    generate_fused_source(ks, TileShape{64, 64, 16}, Halo{}, make_device(),
                          "big");
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("plan sources: one file per fused group, aggregation skipped") {
  Pipeline p = bundled_pipeline();
  Device d = load_device_file(data_path("k20_like.json"));
  FusionPlan fp = plan(p, d);
  CodegenOutput out = generate_plan_sources(fp, p, d, "vision");
  REQUIRE(out.files.size() == 1);
  CHECK(out.files[0].first == "vision_group1.genkernel");
  const EmittedKernel& ek = out.files[0].second;
  // Barriers: staging, then before gaussian (m=2) and gradient (m=3).
  CHECK(ek.sync_points == std::vector<int>{-1, 1, 2});
  CHECK(out.manifest_json.find("\"pipeline\": \"vision\"") !=
        std::string::npos);
  CHECK(out.manifest_json.find("vision_group1.genkernel") !=
        std::string::npos);

  TapCheckResult tc = check_tap_containment(ek.source_text);
  CHECK(tc.accesses > 0);
  CHECK(tc.violations == 0);
}

TEST_CASE("golden sources are byte-stable") {
  struct GoldenCase {
    const char* file;
    std::vector<std::pair<std::string, StencilParams>> ops;
    TileShape tile;
  };
  std::vector<GoldenCase> cases = {
      {"point_pair.genkernel",
       {{"rgba2gray", {}}, {"threshold", {{"th", 128.0}}}},
       TileShape{8, 8, 2}},
      {"smooth_pair.genkernel",
       {{"rgba2gray", {}}, {"gaussian", {{"radius", 2}, {"sigma", 1.0}}}},
       TileShape{8, 8, 2}},
  };
  for (const auto& gc : cases) {
    auto ks = group_of(gc.ops);
    Halo h = fused_halo(ks, HaloMode::Cumulative);
    EmittedKernel ek = generate_fused_source(
        ks, gc.tile, h, make_device(),
        std::string(gc.file).substr(0, std::string(gc.file).find('.')));
    std::string path = golden_path(gc.file);
    if (std::getenv("FUSEPLAN_WRITE_GOLDEN")) {
      write_text_file(path, ek.source_text);
      continue;
    }
    CHECK(ek.source_text == read_text_file(path));
  }
}
