// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/tiny_denoiser.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace relaydiff {

namespace {

constexpr char kCkptMagic[4] = {'R', 'D', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr const char* kSchemaId = "relaydiff-tiny-denoiser";

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

// out[o] = bias[o] + sum_i w[o][i] (*) in[i], 3x3 kernels, zero padding.
void conv3x3_forward(const Grid& in, const double* w, const double* b,
                     int out_ch, Grid& out) {
    const int H = in.height;
    const int W = in.width;
    const int in_ch = in.channels;
    out = Grid(out_ch, H, W);
    for (int o = 0; o < out_ch; ++o) {
        double* out_c = &out.data[static_cast<std::size_t>(o) * H * W];
        const double bo = b[o];
        for (int i = 0; i < H * W; ++i) out_c[i] = bo;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* in_c = &in.data[static_cast<std::size_t>(ic) * H * W];
            const double* wk = w + (static_cast<std::size_t>(o) * in_ch + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const int dy = ky - 1;
                const int y_lo = dy < 0 ? -dy : 0;
                const int y_hi = dy > 0 ? H - dy : H;
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = kx - 1;
                    const int x_lo = dx < 0 ? -dx : 0;
                    const int x_hi = dx > 0 ? W - dx : W;
                    const double wv = wk[ky * 3 + kx];
                    if (wv == 0.0) continue;
                    for (int y = y_lo; y < y_hi; ++y) {
                        double* orow = out_c + static_cast<std::size_t>(y) * W;
                        const double* irow =
                            in_c + static_cast<std::size_t>(y + dy) * W + dx;
                        for (int x = x_lo; x < x_hi; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

// Accumulates dW, db, and (optionally) dIn for a 3x3 conv.
void conv3x3_backward(const Grid& in, const double* w, const Grid& dout,
                      double* dw, double* db, Grid* din) {
    const int H = in.height;
    const int W = in.width;
    const int in_ch = in.channels;
    const int out_ch = dout.channels;
    for (int o = 0; o < out_ch; ++o) {
        const double* dout_c = &dout.data[static_cast<std::size_t>(o) * H * W];
        double acc_b = 0.0;
        for (int i = 0; i < H * W; ++i) acc_b += dout_c[i];
        db[o] += acc_b;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* in_c = &in.data[static_cast<std::size_t>(ic) * H * W];
            double* din_c =
                din ? &din->data[static_cast<std::size_t>(ic) * H * W] : nullptr;
            const double* wk = w + (static_cast<std::size_t>(o) * in_ch + ic) * 9;
            double* dwk = dw + (static_cast<std::size_t>(o) * in_ch + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const int dy = ky - 1;
                const int y_lo = dy < 0 ? -dy : 0;
                const int y_hi = dy > 0 ? H - dy : H;
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = kx - 1;
                    const int x_lo = dx < 0 ? -dx : 0;
                    const int x_hi = dx > 0 ? W - dx : W;
                    double acc_w = 0.0;
                    const double wv = wk[ky * 3 + kx];
                    for (int y = y_lo; y < y_hi; ++y) {
                        const double* drow = dout_c + static_cast<std::size_t>(y) * W;
                        const double* irow =
                            in_c + static_cast<std::size_t>(y + dy) * W + dx;
                        double* din_row =
                            din_c ? din_c + static_cast<std::size_t>(y + dy) * W + dx
                                  : nullptr;
                        for (int x = x_lo; x < x_hi; ++x) {
                            acc_w += drow[x] * irow[x];
                            if (din_row) din_row[x] += wv * drow[x];
                        }
                    }
                    dwk[ky * 3 + kx] += acc_w;
                }
            }
        }
    }
}

struct Layout {
    std::size_t conv_in_w, conv_in_b;
    std::vector<std::size_t> mid_w, mid_b;
    std::size_t head_w, head_b;
    std::size_t time_table, cond_table, w_proj;
    std::size_t total;
};

Layout make_layout(const TinyNetConfig& c) {
    Layout l;
    std::size_t off = 0;
    const std::size_t hid = c.hidden_channels;
    l.conv_in_w = off;
    off += hid * c.in_channels * 9;
    l.conv_in_b = off;
    off += hid;
    for (int m = 0; m < c.mid_layers; ++m) {
        l.mid_w.push_back(off);
        off += hid * hid * 9;
        l.mid_b.push_back(off);
        off += hid;
    }
    l.head_w = off;
    off += static_cast<std::size_t>(c.in_channels) * hid * 9;
    l.head_b = off;
    off += c.in_channels;
    l.time_table = off;
    off += static_cast<std::size_t>(c.time_steps + 1) * hid;
    l.cond_table = off;
    off += static_cast<std::size_t>(c.num_classes + 1) * hid;
    l.w_proj = off;
    off += hid * kGuidanceFeatures;
    l.total = off;
    return l;
}

}  // namespace

std::vector<double> guidance_features(double w) {
    const double u = w / 10.0;
    const double pi = 3.1415926535897932384626433832795;
    return {1.0,
            u,
            u * u,
            std::sin(pi * u),
            std::cos(pi * u),
            std::sin(2.0 * pi * u),
            std::cos(2.0 * pi * u),
            std::sin(4.0 * pi * u)};
}

int TinyNetConfig::param_count() const { return static_cast<int>(make_layout(*this).total); }

TinyNet::TinyNet(TinyNetConfig cfg) : cfg_(cfg) {
    if (cfg_.in_channels < 1 || cfg_.hidden_channels < 1 || cfg_.mid_layers < 0 ||
        cfg_.num_classes < 1 || cfg_.time_steps < 1) {
        throw std::invalid_argument("invalid tiny denoiser architecture");
    }
    params_.assign(make_layout(cfg_).total, 0.0);
}

TinyNet TinyNet::randomized(const TinyNetConfig& cfg, Rng& rng) {
    TinyNet net(cfg);
    const Layout l = make_layout(cfg);
    auto& p = net.params_;
    auto he_fill = [&](std::size_t off, std::size_t count, int fan_in, double gain) {
        const double std = gain * std::sqrt(2.0 / fan_in);
        for (std::size_t i = 0; i < count; ++i) p[off + i] = std * rng.normal();
    };
    const std::size_t hid = cfg.hidden_channels;
    he_fill(l.conv_in_w, hid * cfg.in_channels * 9, cfg.in_channels * 9, 1.0);
    for (int m = 0; m < cfg.mid_layers; ++m)
        he_fill(l.mid_w[m], hid * hid * 9, static_cast<int>(hid) * 9, 1.0);
    // Small head keeps early training stable.
    he_fill(l.head_w, static_cast<std::size_t>(cfg.in_channels) * hid * 9,
            static_cast<int>(hid) * 9, 0.1);
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.time_steps + 1) * hid; ++i)
        p[l.time_table + i] = 0.1 * rng.normal();
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.num_classes + 1) * hid; ++i)
        p[l.cond_table + i] = 0.1 * rng.normal();
    // w projection starts at zero: output is guidance-independent until
    // distillation trains the pathway.
    return net;
}

std::size_t TinyNet::w_proj_offset() const { return make_layout(cfg_).w_proj; }
std::size_t TinyNet::w_proj_size() const {
    return static_cast<std::size_t>(cfg_.hidden_channels) * kGuidanceFeatures;
}
std::size_t TinyNet::time_table_offset() const { return make_layout(cfg_).time_table; }
std::size_t TinyNet::cond_table_offset() const { return make_layout(cfg_).cond_table; }

Grid TinyNet::forward(const Grid& z, int t, ConditionId cond,
                      std::optional<double> w) const {
    Tape tape;
    return forward_tape(z, t, cond, w, tape);
}

Grid TinyNet::forward_tape(const Grid& z, int t, ConditionId cond,
                           std::optional<double> w, Tape& tape) const {
    if (z.channels != cfg_.in_channels) {
        throw std::invalid_argument("tiny denoiser expects " +
                                    std::to_string(cfg_.in_channels) +
                                    " channels, got " + std::to_string(z.channels));
    }
    if (t < 0 || t > cfg_.time_steps)
        throw std::out_of_range("timestep outside embedding table");
    int cond_row = cfg_.num_classes;  // reserved null-condition row
    if (cond.has_value()) {
        if (*cond < 0 || *cond >= cfg_.num_classes)
            throw std::out_of_range("condition id outside [0, num_classes)");
        cond_row = *cond;
    }

    const Layout l = make_layout(cfg_);
    const double* p = params_.data();
    const int hid = cfg_.hidden_channels;
    const int HW = z.height * z.width;

    tape.input = z;
    tape.t = t;
    tape.cond_row = cond_row;
    tape.w = w;
    tape.pre.clear();
    tape.post.clear();

    Grid h;
    conv3x3_forward(z, p + l.conv_in_w, p + l.conv_in_b, hid, h);

    std::vector<double> phi;
    if (w.has_value()) phi = guidance_features(*w);
    for (int c = 0; c < hid; ++c) {
        double emb = p[l.time_table + static_cast<std::size_t>(t) * hid + c] +
                     p[l.cond_table + static_cast<std::size_t>(cond_row) * hid + c];
        if (w.has_value()) {
            const double* proj = p + l.w_proj + static_cast<std::size_t>(c) * kGuidanceFeatures;
            for (int j = 0; j < kGuidanceFeatures; ++j) emb += proj[j] * phi[j];
        }
        double* hc = &h.data[static_cast<std::size_t>(c) * HW];
        for (int i = 0; i < HW; ++i) hc[i] += emb;
    }

    tape.pre.push_back(h);
    Grid a = h;
    for (double& v : a.data) v = silu(v);
    tape.post.push_back(a);

    for (int m = 0; m < cfg_.mid_layers; ++m) {
        conv3x3_forward(tape.post.back(), p + l.mid_w[m], p + l.mid_b[m], hid, h);
        tape.pre.push_back(h);
        a = h;
        for (double& v : a.data) v = silu(v);
        tape.post.push_back(a);
    }

    Grid out;
    conv3x3_forward(tape.post.back(), p + l.head_w, p + l.head_b, cfg_.in_channels,
                    out);
    return out;
}

void TinyNet::backward(const Tape& tape, const Grid& dout,
                       std::vector<double>& grad) const {
    const Layout l = make_layout(cfg_);
    if (grad.size() != l.total)
        throw std::invalid_argument("gradient buffer has wrong size");
    const double* p = params_.data();
    double* g = grad.data();
    const int hid = cfg_.hidden_channels;
    const int HW = tape.input.height * tape.input.width;

    // Head.
    Grid da(hid, tape.input.height, tape.input.width, 0.0);
    conv3x3_backward(tape.post.back(), p + l.head_w, dout, g + l.head_w,
                     g + l.head_b, &da);

    // Mid blocks in reverse.
    for (int m = cfg_.mid_layers - 1; m >= 0; --m) {
        Grid dh = da;
        const Grid& pre = tape.pre[static_cast<std::size_t>(m) + 1];
        for (std::size_t i = 0; i < dh.data.size(); ++i)
            dh.data[i] *= silu_grad(pre.data[i]);
        Grid da_prev(hid, tape.input.height, tape.input.width, 0.0);
        conv3x3_backward(tape.post[m], p + l.mid_w[m], dh, g + l.mid_w[m],
                         g + l.mid_b[m], &da_prev);
        da = std::move(da_prev);
    }

    // Stem + embeddings.
    Grid dh = da;
    for (std::size_t i = 0; i < dh.data.size(); ++i)
        dh.data[i] *= silu_grad(tape.pre[0].data[i]);
    conv3x3_backward(tape.input, p + l.conv_in_w, dh, g + l.conv_in_w,
                     g + l.conv_in_b, nullptr);

    std::vector<double> phi;
    if (tape.w.has_value()) phi = guidance_features(*tape.w);
    for (int c = 0; c < hid; ++c) {
        const double* dh_c = &dh.data[static_cast<std::size_t>(c) * HW];
        double demb = 0.0;
        for (int i = 0; i < HW; ++i) demb += dh_c[i];
        g[l.time_table + static_cast<std::size_t>(tape.t) * hid + c] += demb;
        g[l.cond_table + static_cast<std::size_t>(tape.cond_row) * hid + c] += demb;
        if (tape.w.has_value()) {
            double* gproj = g + l.w_proj + static_cast<std::size_t>(c) * kGuidanceFeatures;
            for (int j = 0; j < kGuidanceFeatures; ++j) gproj[j] += demb * phi[j];
        }
    }
}

void TinyNet::save(const std::string& path) const {
    nlohmann::json header = {
        {"schema", kSchemaId},
        {"version", kCkptVersion},
        {"arch",
         {{"in_channels", cfg_.in_channels},
          {"hidden_channels", cfg_.hidden_channels},
          {"mid_layers", cfg_.mid_layers},
          {"num_classes", cfg_.num_classes},
          {"time_steps", cfg_.time_steps}}},
        {"stage", cfg_.stage == Stage::base ? "base" : "super_resolution"},
        {"w_conditioned", cfg_.w_conditioned},
        {"param_count", params_.size()},
    };
    const std::string htext = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kCkptMagic, 4);
    const std::uint32_t version = kCkptVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(params_.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing " + path);
}

TinyNet TinyNet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw std::runtime_error(path + ": not a denoiser checkpoint");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kCkptVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error(path + ": truncated checkpoint header");
    const nlohmann::json header = nlohmann::json::parse(htext);
    if (header.value("schema", "") != kSchemaId)
        throw std::runtime_error(path + ": unexpected checkpoint schema");

    TinyNetConfig cfg;
    const auto& arch = header.at("arch");
    cfg.in_channels = arch.at("in_channels").get<int>();
    cfg.hidden_channels = arch.at("hidden_channels").get<int>();
    cfg.mid_layers = arch.at("mid_layers").get<int>();
    cfg.num_classes = arch.at("num_classes").get<int>();
    cfg.time_steps = arch.at("time_steps").get<int>();
    cfg.stage = header.at("stage").get<std::string>() == "base"
                    ? Stage::base
                    : Stage::super_resolution;
    cfg.w_conditioned = header.at("w_conditioned").get<bool>();

    TinyNet net(cfg);
    const std::uint64_t expected = header.at("param_count").get<std::uint64_t>();
    if (expected != net.params_.size())
        throw std::runtime_error(path + ": parameter manifest does not match architecture");
    in.read(reinterpret_cast<char*>(net.params_.data()),
            static_cast<std::streamsize>(net.params_.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated parameter payload");
    return net;
}

namespace {

class TinyDenoiserAdapter final : public Denoiser {
public:
    explicit TinyDenoiserAdapter(std::shared_ptr<const TinyNet> net)
        : net_(std::move(net)) {}

    Grid predict(const Grid& z_t, int t, ConditionId cond,
                 std::optional<double> w) const override {
        return net_->forward(z_t, t, cond, w);
    }
    Stage stage() const override { return net_->config().stage; }
    bool consumes_guidance() const override { return net_->config().w_conditioned; }

private:
    std::shared_ptr<const TinyNet> net_;
};

}  // namespace

DenoiserPtr make_tiny_denoiser(std::shared_ptr<const TinyNet> net) {
    return std::make_shared<TinyDenoiserAdapter>(std::move(net));
}

}  // namespace relaydiff
