#include "fuseplan/codegen.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "fuseplan/dependency.hpp"
#include "fuseplan/stencil_catalog.hpp"
#include "json.hpp"

namespace fuseplan {

namespace {

double param(const KernelDesc& k, const std::string& key, double dflt) {
  auto it = k.params.find(key);
  return it == k.params.end() ? dflt : it->second;
}

std::string flit(double v) {
  std::ostringstream ss;
  ss << std::setprecision(9) << v;
  std::string s = ss.str();
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos)
    s += ".0";
  return s + "f";
}

std::string off(int v) {
  if (v == 0) return "";
  std::ostringstream ss;
  ss << (v > 0 ? "+" : "") << v;
  return ss.str();
}

// Canonical block-relative access for a stencil tap.
std::string global_access(int dx, int dy, int dt) {
  return "in[i+ii" + off(dx) + ", j+jj" + off(dy) + ", k+kk" + off(dt) + "]";
}

struct AccessScanner {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(std::uint8_t(s[pos]))) ++pos;
  }
  bool eat(const std::string& tok) {
    skip_ws();
    if (s.compare(pos, tok.size(), tok) != 0) return false;
    pos += tok.size();
    return true;
  }
  void expect(const std::string& tok) {
    require(eat(tok), ErrorKind::Input,
            "non-canonical access '" + s + "': expected '" + tok + "'");
  }
  int optional_constant() {
    skip_ws();
    if (pos >= s.size() || (s[pos] != '+' && s[pos] != '-')) return 0;
    int sign = s[pos] == '-' ? -1 : 1;
    ++pos;
    skip_ws();
    require(pos < s.size() && std::isdigit(std::uint8_t(s[pos])),
            ErrorKind::Input, "non-canonical access '" + s + "'");
    int v = 0;
    while (pos < s.size() && std::isdigit(std::uint8_t(s[pos])))
      v = v * 10 + (s[pos++] - '0');
    return sign * v;
  }
};

}  // namespace

std::string rewrite_access(const std::string& access, const Halo& halo,
                           const std::string& staged_name) {
  std::size_t open = access.find('[');
  std::size_t close = access.rfind(']');
  require(open != std::string::npos && close != std::string::npos &&
              close > open && open > 0,
          ErrorKind::Input, "non-canonical access '" + access + "'");
  std::string inside = access.substr(open + 1, close - open - 1);

  static const char* kBlock[3] = {"i", "j", "k"};
  static const char* kThread[3] = {"ii", "jj", "kk"};
  static const char* kOut[3] = {"thx+ii", "thy+jj", "tht+kk"};
  const int lo[3] = {halo.x_lo, halo.y_lo, halo.t_lo};

  std::vector<std::string> comps;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = inside.find(',', start);
    comps.push_back(inside.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  require(comps.size() == 2 || comps.size() == 3, ErrorKind::Input,
          "non-canonical access '" + access + "': expected 2 or 3 indices");

  std::string out = staged_name + "[";
  for (std::size_t d = 0; d < comps.size(); ++d) {
    AccessScanner sc{comps[d]};
    sc.expect(kBlock[d]);
    sc.expect("+");
    sc.expect(kThread[d]);
    int disp = sc.optional_constant();
    sc.skip_ws();
    require(sc.pos == comps[d].size(), ErrorKind::Input,
            "non-canonical access '" + access + "'");
    if (d) out += ", ";
    out += kOut[d] + off(lo[int(d)] + disp);
  }
  return out + "]";
}

namespace {

// Valid staged region (origin and extent per axis) as it shrinks across
// member kernels.
struct Region {
  int lx = 0, ly = 0, lt = 0;
  int ex = 0, ey = 0, et = 0;
};

Region output_region(const Region& in, const Halo& h) {
  Region r;
  r.lx = in.lx + h.x_lo;
  r.ly = in.ly + h.y_lo;
  r.lt = in.lt + h.t_lo;
  r.ex = std::max(1, in.ex - h.dx());
  r.ey = std::max(1, in.ey - h.dy());
  r.et = std::max(1, in.et - h.dt());
  return r;
}

struct Emitter {
  std::ostringstream out;
  int indent = 0;

  void line(const std::string& s) {
    for (int i = 0; i < indent; ++i) out << "  ";
    out << s << '\n';
  }
  void open(const std::string& s) {
    line(s + " {");
    ++indent;
  }
  void close() {
    --indent;
    line("}");
  }
};

// Staged access of a tap, relative to the member's output position.
std::string tap(const std::string& buf, const Region& reg, int dx, int dy,
                int dt, int c) {
  Halo shift{reg.lx, 0, reg.ly, 0, reg.lt, 0};
  return rewrite_access(global_access(dx, dy, dt), shift, buf) + "[" +
         std::to_string(c) + "]";
}

void emit_body_statements(Emitter& e, const KernelDesc& k,
                          const std::string& src, const std::string& dst,
                          const Region& reg) {
  auto in = [&](int dx, int dy, int dt, int c) {
    return tap(src, reg, dx, dy, dt, c);
  };
  auto store = [&](int c) { return tap(dst, reg, 0, 0, 0, c); };
  const std::string& op = k.stencil_op;

  if (op == "rgba2gray") {
    e.line(store(0) + " = " + flit(param(k, "wr", 0.299)) + " * " +
           in(0, 0, 0, 0) + " + " + flit(param(k, "wg", 0.587)) + " * " +
           in(0, 0, 0, 1) + " + " + flit(param(k, "wb", 0.114)) + " * " +
           in(0, 0, 0, 2) + ";");
    return;
  }
  if (op == "threshold") {
    for (int c = 0; c < k.out_channels; ++c)
      e.line(store(c) + " = (" + in(0, 0, 0, c) + " >= " +
             flit(param(k, "th", 128.0)) + ") ? " +
             flit(param(k, "white", 255.0)) + " : " +
             flit(param(k, "black", 0.0)) + ";");
    return;
  }
  if (op == "identity") {
    for (int c = 0; c < k.out_channels; ++c)
      e.line(store(c) + " = " + in(0, 0, 0, c) + ";");
    return;
  }
  if (op == "scale_offset") {
    for (int c = 0; c < k.out_channels; ++c)
      e.line(store(c) + " = " + flit(param(k, "scale", 1.0)) + " * " +
             in(0, 0, 0, c) + " + " + flit(param(k, "offset", 0.0)) + ";");
    return;
  }
  if (op == "gaussian") {
    int radius = int(param(k, "radius", 2));
    double sigma = param(k, "sigma", 1.0);
    int d = 2 * radius + 1;
    std::vector<double> w(std::size_t(d) * d);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx) {
        double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        w[std::size_t(dy + radius) * d + (dx + radius)] = v;
        sum += v;
      }
    for (int c = 0; c < k.out_channels; ++c) {
      e.line("float acc = 0.0f;");
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          e.line("acc += " +
                 flit(w[std::size_t(dy + radius) * d + (dx + radius)] / sum) +
                 " * " + in(dx, dy, 0, c) + ";");
      e.line(store(c) + " = acc;");
    }
    return;
  }
  if (op == "gradient") {
    for (int c = 0; c < k.out_channels; ++c) {
      e.line("float gx = (" + in(1, -1, 0, c) + " + 2.0f * " + in(1, 0, 0, c) +
             " + " + in(1, 1, 0, c) + ") - (" + in(-1, -1, 0, c) +
             " + 2.0f * " + in(-1, 0, 0, c) + " + " + in(-1, 1, 0, c) + ");");
      e.line("float gy = (" + in(-1, 1, 0, c) + " + 2.0f * " + in(0, 1, 0, c) +
             " + " + in(1, 1, 0, c) + ") - (" + in(-1, -1, 0, c) +
             " + 2.0f * " + in(0, -1, 0, c) + " + " + in(1, -1, 0, c) + ");");
      e.line(store(c) + " = sqrtf(gx * gx + gy * gy);");
    }
    return;
  }
  if (op == "box_mean") {
    int rx = int(param(k, "radius_x", 1));
    int ry = int(param(k, "radius_y", 1));
    int rt = int(param(k, "radius_t", 0));
    int count = (2 * rx + 1) * (2 * ry + 1) * (2 * rt + 1);
    for (int c = 0; c < k.out_channels; ++c) {
      e.line("float acc = 0.0f;");
      for (int dt = -rt; dt <= rt; ++dt)
        for (int dy = -ry; dy <= ry; ++dy)
          for (int dx = -rx; dx <= rx; ++dx)
            e.line("acc += " + in(dx, dy, dt, c) + ";");
      e.line(store(c) + " = acc * " + flit(1.0 / count) + ";");
    }
    return;
  }
  throw Error(ErrorKind::Input,
              "stencil_op '" + op + "' has no fused-kernel template");
}

void emit_member_body(Emitter& e, const KernelDesc& k, const std::string& src,
                      const std::string& dst, const Region& in_reg,
                      const Region& out_reg) {
  e.line("// K" + std::to_string(k.id) + " " + k.stencil_op + " body");
  if (stencil_op_info(k.stencil_op).causal_recurrence) {
    // Each thread owns an (x, y) site and scans t causally.
    std::string alpha = flit(param(k, "alpha", 0.5));
    std::string one_minus = flit(1.0 - param(k, "alpha", 0.5));
    e.open("for (int jj = 0; thy + jj < " + std::to_string(out_reg.ey) +
           "; jj += TH_Y)");
    e.open("for (int ii = 0; thx + ii < " + std::to_string(out_reg.ex) +
           "; ii += TH_X)");
    for (int c = 0; c < k.out_channels; ++c) {
      e.line("float prev = 0.0f;");
      e.open("for (int kk = 0; kk < " + std::to_string(out_reg.et) + "; ++kk)");
      e.line("float cur = " + tap(src, out_reg, 0, 0, 0, c) + ";");
      e.line("prev = (kk == 0) ? cur : (" + alpha + " * cur + " + one_minus +
             " * prev);");
      e.line(tap(dst, out_reg, 0, 0, 0, c) + " = prev;");
      e.close();
    }
    e.close();
    e.close();
    return;
  }
  (void)in_reg;
  e.open("for (int kk = 0; kk < " + std::to_string(out_reg.et) + "; ++kk)");
  e.open("for (int jj = 0; thy + jj < " + std::to_string(out_reg.ey) +
         "; jj += TH_Y)");
  e.open("for (int ii = 0; thx + ii < " + std::to_string(out_reg.ex) +
         "; ii += TH_X)");
  emit_body_statements(e, k, src, dst, out_reg);
  e.close();
  e.close();
  e.close();
}

void fold_block_threads(const TileShape& tile, const Device& device, int& th_x,
                        int& th_y, int& ppt_x, int& ppt_y) {
  th_x = tile.x;
  th_y = tile.y;
  ppt_x = ppt_y = 1;
  while (std::int64_t(th_x) * th_y > device.max_threads_per_block) {
    if (th_x >= th_y) {
      th_x = (th_x + 1) / 2;
      ppt_x *= 2;
    } else {
      th_y = (th_y + 1) / 2;
      ppt_y *= 2;
    }
  }
}

}  // namespace

EmittedKernel generate_fused_source(std::span<const KernelDesc> group,
                                    const TileShape& tile, const Halo& halo,
                                    const Device& device,
                                    const std::string& name) {
  require(!group.empty(), ErrorKind::Input, "empty kernel group");
  for (const auto& k : group) stencil_op_info(k.stencil_op);  // known ops only

  EmittedKernel ek;
  ek.name = name;

  int sx = tile.x + halo.dx(), sy = tile.y + halo.dy(), st = tile.t + halo.dt();
  int max_ch = group.front().in_channels;
  for (const auto& k : group) max_ch = std::max(max_ch, k.out_channels);
  // Capacity is accounted per pixel, matching the planner's budget (the
  // channel planes of a pixel need not be resident simultaneously).
  ek.staged_buffer_elems = std::int64_t(sx) * sy * st;
  require(ek.staged_buffer_elems * std::int64_t(sizeof(float)) <=
              device.smem_bytes,
          ErrorKind::Infeasible, "staged input box exceeds SHMEM capacity");

  int ppt_x, ppt_y;
  fold_block_threads(tile, device, ek.threads_x, ek.threads_y, ppt_x, ppt_y);
  ek.pixels_per_thread_x = ppt_x;
  ek.pixels_per_thread_y = ppt_y;

  // A member with a nonzero halo reads neighbours of what the previous
  // stage wrote, so it cannot update the staged array in place; those
  // stages ping-pong between two arrays.
  bool ping_pong = false;
  for (const auto& k : group)
    if (!k.halo.zero()) ping_pong = true;
  ek.staged_arrays = ping_pong ? 2 : 1;

  Emitter e;
  e.line("// " + name + ": fused kernel over K" +
         std::to_string(group.front().id) + "..K" +
         std::to_string(group.back().id));
  e.open("__global__ void " + name +
         "(const float* gin, float* gout, int width, int height, int frames)");
  e.line("const int TH_X = " + std::to_string(ek.threads_x) +
         ", TH_Y = " + std::to_string(ek.threads_y) + ";");
  e.line("// pixel index, computed once per thread");
  e.line("const int thx = threadIdx.x, thy = threadIdx.y, tht = 0;");
  e.line("const int i = blockIdx.x * " + std::to_string(tile.x) + " + thx;");
  e.line("const int j = blockIdx.y * " + std::to_string(tile.y) + " + thy;");
  e.line("const int k = blockIdx.z * " + std::to_string(tile.t) + " + tht;");
  std::string dims = "[" + std::to_string(st) + "][" + std::to_string(sy) +
                     "][" + std::to_string(sx) + "][" + std::to_string(max_ch) +
                     "]";
  e.line("__shared__ float staged_a" + dims + ";");
  if (ping_pong) e.line("__shared__ float staged_b" + dims + ";");
  e.line("");

  // Staging prologue: copy the haloed input box, border clamped.
  Region stage_reg;  // staged array in its own coordinates
  stage_reg.ex = sx;
  stage_reg.ey = sy;
  stage_reg.et = st;
  e.line("// stage the input box (GMEM -> SHMEM)");
  e.open("for (int kk = 0; kk < " + std::to_string(st) + "; ++kk)");
  e.open("for (int jj = 0; thy + jj < " + std::to_string(sy) +
         "; jj += TH_Y)");
  e.open("for (int ii = 0; thx + ii < " + std::to_string(sx) +
         "; ii += TH_X)");
  e.open("for (int c = 0; c < " + std::to_string(group.front().in_channels) +
         "; ++c)");
  e.line(rewrite_access(global_access(0, 0, 0), Halo{}, "staged_a") +
         "[c] = gin[clamp(i+ii" + off(-halo.x_lo) +
         ", 0, width-1), clamp(j+jj" + off(-halo.y_lo) +
         ", 0, height-1), clamp(k+kk" + off(-halo.t_lo) +
         ", 0, frames-1)][c];");
  e.close();
  e.close();
  e.close();
  e.close();
  e.line("__syncthreads();");
  ek.sync_points.push_back(-1);

  // Member bodies in pipeline order; barrier before each TMT consumer.
  std::string cur = "staged_a";
  Region reg = stage_reg;
  for (std::size_t m = 0; m < group.size(); ++m) {
    const KernelDesc& k = group[m];
    if (m > 0 && classify_dependency(k) == DependencyType::TMT) {
      e.line("");
      e.line("__syncthreads();");
      ek.sync_points.push_back(int(m) - 1);
    }
    e.line("");
    std::string dst = cur;
    if (!k.halo.zero()) dst = cur == "staged_a" ? "staged_b" : "staged_a";
    Region out_reg = output_region(reg, k.halo);
    emit_member_body(e, k, cur, dst, reg, out_reg);
    cur = dst;
    reg = out_reg;
  }

  // Write-back epilogue.
  Region final_reg;
  final_reg.lx = halo.x_lo;
  final_reg.ly = halo.y_lo;
  final_reg.lt = halo.t_lo;
  e.line("");
  e.line("// write back the output tile (SHMEM -> GMEM)");
  e.open("for (int kk = 0; kk < " + std::to_string(tile.t) + "; ++kk)");
  e.open("for (int jj = 0; thy + jj < " + std::to_string(tile.y) +
         "; jj += TH_Y)");
  e.open("for (int ii = 0; thx + ii < " + std::to_string(tile.x) +
         "; ii += TH_X)");
  e.open("if (i+ii < width && j+jj < height && k+kk < frames)");
  for (int c = 0; c < group.back().out_channels; ++c)
    e.line("gout[i+ii, j+jj, k+kk][" + std::to_string(c) + "] = " +
           tap(cur, final_reg, 0, 0, 0, c) + ";");
  e.close();
  e.close();
  e.close();
  e.close();
  e.close();

  ek.source_text = e.out.str();
  return ek;
}

CodegenOutput generate_plan_sources(const FusionPlan& plan,
                                    const Pipeline& pipeline,
                                    const Device& device,
                                    const std::string& pipeline_name) {
  using ordered_json = nlohmann::ordered_json;
  CodegenOutput out;
  ordered_json manifest;
  manifest["pipeline"] = pipeline_name;
  manifest["device"] = plan.device_name;
  manifest["halo_mode"] = to_string(plan.halo_mode);
  manifest["kernels"] = ordered_json::array();
  int k = 0;
  for (const PlanGroup& g : plan.groups) {
    ++k;
    if (g.global_aggregation) continue;  // tracking stage, not a fused kernel
    std::span<const KernelDesc> members(pipeline.kernels.data() + (g.first - 1),
                                        std::size_t(g.last - g.first + 1));
    std::string name = pipeline_name + "_group" + std::to_string(k);
    EmittedKernel ek =
        generate_fused_source(members, g.tile, g.halo, device, name);
    std::string file = name + ".genkernel";
    ordered_json jk;
    jk["group"] = {{"first", g.first}, {"last", g.last}};
    jk["file"] = file;
    jk["tile"] = {{"x", g.tile.x}, {"y", g.tile.y}, {"t", g.tile.t}};
    jk["smem_bytes"] = ek.staged_buffer_elems * std::int64_t(sizeof(float)) *
                       ek.staged_arrays;
    jk["staged_arrays"] = ek.staged_arrays;
    jk["sync_points"] = ek.sync_points;
    manifest["kernels"].push_back(std::move(jk));
    out.files.emplace_back(file, std::move(ek));
  }
  out.manifest_json = manifest.dump(2) + "\n";
  return out;
}

}  // namespace fuseplan
