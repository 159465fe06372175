#include "sima/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "sima/labels.hpp"
#include "sima/metrics.hpp"

namespace sima {

namespace {

constexpr std::size_t kMinInstanceArea = 16;

struct Point {
    double y;
    double x;
};

double dist2(Point a, Point b) { return (a.y - b.y) * (a.y - b.y) + (a.x - b.x) * (a.x - b.x); }

bool inside_polygon(const std::vector<Point>& poly, Point p) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point a = poly[i];
        const Point b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

double segment_distance(Point p, Point a, Point b) {
    const double vy = b.y - a.y;
    const double vx = b.x - a.x;
    const double len2 = vy * vy + vx * vx;
    double t = len2 > 0.0 ? ((p.y - a.y) * vy + (p.x - a.x) * vx) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::sqrt(dist2(p, {a.y + t * vy, a.x + t * vx}));
}

std::vector<Point> random_grain(const SynthParams& p, std::mt19937_64& rng, double& radius) {
    const Point c{p.height / 2.0, p.width / 2.0};
    radius = std::min(p.width, p.height) / 2.0 - p.grain_margin;
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    std::uniform_real_distribution<double> scale(0.82, 1.0);
    const int vertices = 14;
    std::vector<Point> poly;
    for (int k = 0; k < vertices; ++k) {
        const double a = 2.0 * std::numbers::pi * (k + jitter(rng)) / vertices;
        const double r = radius * scale(rng);
        poly.push_back({c.y + r * std::sin(a), c.x + r * std::cos(a)});
    }
    return poly;
}

Point sample_in_disc(Point c, double r, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rr = r * std::sqrt(u(rng));
    const double a = 2.0 * std::numbers::pi * u(rng);
    return {c.y + rr * std::sin(a), c.x + rr * std::cos(a)};
}

std::vector<Point> place_seeds(const SynthParams& p, const std::vector<Point>& poly, double radius,
                               std::mt19937_64& rng) {
    const Point center{p.height / 2.0, p.width / 2.0};
    std::vector<Point> seeds;
    const int max_tries = 4000;

    Point cluster = center;
    const double cluster_r = p.cluster_radius_frac * radius;
    if (p.n_seeds_small > 0) {
        cluster = sample_in_disc(center, std::max(0.0, radius - cluster_r) * 0.6, rng);
        const double sep = 0.75 * cluster_r / std::sqrt(static_cast<double>(p.n_seeds_small));
        for (int placed = 0, tries = 0; placed < p.n_seeds_small; ++tries) {
            if (tries > max_tries * p.n_seeds_small) throw Error(ErrorCode::SynthInfeasible, "small seeds do not fit");
            const Point q = sample_in_disc(cluster, cluster_r, rng);
            if (!inside_polygon(poly, q)) continue;
            if (std::any_of(seeds.begin(), seeds.end(), [&](Point s) { return dist2(s, q) < sep * sep; })) continue;
            seeds.push_back(q);
            ++placed;
        }
    }
    if (p.n_seeds_large > 0) {
        const double sep = 0.9 * radius / std::sqrt(static_cast<double>(p.n_seeds_large));
        const double keep_out = p.n_seeds_small > 0 ? cluster_r + 0.5 * sep : 0.0;
        const std::size_t small_count = seeds.size();
        for (int placed = 0, tries = 0; placed < p.n_seeds_large; ++tries) {
            if (tries > max_tries * p.n_seeds_large) throw Error(ErrorCode::SynthInfeasible, "large seeds do not fit");
            const Point q = sample_in_disc(center, radius, rng);
            if (!inside_polygon(poly, q)) continue;
            if (keep_out > 0.0 && dist2(q, cluster) < keep_out * keep_out) continue;
            bool ok = true;
            for (std::size_t k = small_count; k < seeds.size() && ok; ++k) ok = dist2(seeds[k], q) >= sep * sep;
            if (!ok) continue;
            seeds.push_back(q);
            ++placed;
        }
    }
    return seeds;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

void SynthParams::validate() const {
    if (width < 64 || height < 64) throw Error(ErrorCode::SynthInfeasible, "dimensions must be >= 64");
    if (boundary_px < 1) throw Error(ErrorCode::SynthInfeasible, "boundary_px must be >= 1");
    if (n_seeds_small < 0 || n_seeds_large < 0 || n_seeds_small + n_seeds_large < 1) {
        throw Error(ErrorCode::SynthInfeasible, "need at least one seed");
    }
    if (grain_margin < 0 || 2 * grain_margin + 16 > std::min(width, height)) {
        throw Error(ErrorCode::SynthInfeasible, "grain margin leaves no room");
    }
    if (!(cluster_radius_frac > 0.0 && cluster_radius_frac <= 1.0)) {
        throw Error(ErrorCode::SynthInfeasible, "cluster_radius_frac must be in (0,1]");
    }
    if (!(elongation >= 1.0)) throw Error(ErrorCode::SynthInfeasible, "elongation must be >= 1");
    if (scratch_count < 0 || noise_sigma < 0.0) throw Error(ErrorCode::SynthInfeasible, "negative scratch/noise");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master ^ (index * 0x9e3779b97f4a7c15ULL);
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SynthSample generate(const SynthParams& params, int patch_size) {
    params.validate();
    std::mt19937_64 rng(params.seed);
    const int w = params.width;
    const int h = params.height;

    double radius = 0.0;
    const std::vector<Point> poly = random_grain(params, rng, radius);
    const std::vector<Point> seeds = place_seeds(params, poly, radius, rng);
    const double half = params.boundary_px / 2.0;

    // Cell distance metric: lengths along the elongation axis count 1/elongation.
    const double uy = std::sin(params.elongation_angle);
    const double ux = std::cos(params.elongation_angle);
    const double shrink = 1.0 / (params.elongation * params.elongation);
    auto metric = [&](double dy, double dx) {
        const double a = dy * uy + dx * ux;
        const double b = dx * uy - dy * ux;
        return a * a * shrink + b * b;
    };
    // Euclidean length of M * (dy, dx); scales the bisector distance.
    auto metric_grad = [&](double dy, double dx) {
        const double a = (dy * uy + dx * ux) * shrink;
        const double b = dx * uy - dy * ux;
        return std::sqrt(a * a + b * b);
    };

    SynthSample out;
    out.grain_mask = Mask(w, h, 0);
    LabelMap cells(w, h, 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point q{y + 0.5, x + 0.5};
            if (!inside_polygon(poly, q)) continue;
            out.grain_mask(y, x) = 1;
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < seeds.size(); ++k) {
                const double d = metric(q.y - seeds[k].y, q.x - seeds[k].x);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            double ridge = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < seeds.size(); ++k) {
                if (k == best) continue;
                const double sep = metric_grad(seeds[k].y - seeds[best].y, seeds[k].x - seeds[best].x);
                ridge = std::min(ridge, (metric(q.y - seeds[k].y, q.x - seeds[k].x) - best_d) / (2.0 * sep));
            }
            for (std::size_t v = 0, u = poly.size() - 1; v < poly.size() && ridge >= half; u = v++) {
                ridge = std::min(ridge, segment_distance(q, poly[u], poly[v]));
            }
            if (ridge >= half) cells(y, x) = static_cast<InstanceId>(best + 1);
        }
    }

    // Keep the largest 4-connected piece of every cell and drop tiny ones.
    const LabelMap pieces = split_components(cells);
    const std::vector<InstanceInfo> piece_info = instance_table(pieces);
    std::vector<std::size_t> best_piece(seeds.size() + 1, 0);
    std::vector<std::size_t> best_area(seeds.size() + 1, 0);
    {
        std::vector<InstanceId> owner(piece_info.size() + 1, 0);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (pieces[i] != 0) owner[pieces[i]] = cells[i];
        }
        for (const InstanceInfo& info : piece_info) {
            const InstanceId cell = owner[info.id];
            if (info.area > best_area[cell]) {
                best_area[cell] = info.area;
                best_piece[cell] = info.id;
            }
        }
    }
    LabelMap kept(w, h, 0);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const InstanceId cell = cells[i];
        if (cell == 0) continue;
        if (pieces[i] == best_piece[cell] && best_area[cell] >= kMinInstanceArea) kept[i] = cell;
    }
    out.labels = relabel_sequential(kept);
    const std::vector<InstanceInfo> table = instance_table(out.labels);
    if (table.empty()) throw Error(ErrorCode::SynthInfeasible, "no crystal survived");

    // Rendering: per-crystal tone with a mild gradient, dark boundaries, scratches, noise.
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    struct Tone {
        double r, g, b, gy, gx;
    };
    std::vector<Tone> tones(table.size() + 1);
    for (std::size_t k = 1; k < tones.size(); ++k) {
        const double base = 120.0 + 100.0 * u01(rng);
        const double a = 2.0 * std::numbers::pi * u01(rng);
        const double slope = 0.08 * u01(rng);
        tones[k] = {base, base * (0.85 + 0.15 * u01(rng)), base * (0.7 + 0.25 * u01(rng)), slope * std::sin(a),
                    slope * std::cos(a)};
    }
    out.image = RgbImage(w, h, Rgb{28, 28, 34});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const InstanceId id = out.labels(y, x);
            if (id != 0) {
                const Tone& t = tones[id];
                const double shade = t.gy * (y - h / 2.0) + t.gx * (x - w / 2.0);
                out.image(y, x) = {to_byte(t.r + shade), to_byte(t.g + shade), to_byte(t.b + shade)};
            } else if (out.grain_mask(y, x)) {
                out.image(y, x) = {52, 44, 38};
            }
        }
    }
    for (int s = 0; s < params.scratch_count; ++s) {
        const Point a = sample_in_disc({h / 2.0, w / 2.0}, radius, rng);
        const Point b = sample_in_disc({h / 2.0, w / 2.0}, radius, rng);
        const double len = std::sqrt(dist2(a, b));
        const int steps = static_cast<int>(std::ceil(len)) + 1;
        for (int k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) / steps;
            const int cy = static_cast<int>(a.y + t * (b.y - a.y));
            const int cx = static_cast<int>(a.x + t * (b.x - a.x));
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    if (out.image.contains(cy + oy, cx + ox) && out.grain_mask(cy + oy, cx + ox)) {
                        out.image(cy + oy, cx + ox) = {40, 36, 34};
                    }
                }
            }
        }
    }
    if (params.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, params.noise_sigma);
        for (Rgb& px : out.image.values()) {
            px.r = to_byte(px.r + noise(rng));
            px.g = to_byte(px.g + noise(rng));
            px.b = to_byte(px.b + noise(rng));
        }
    }

    const Homogeneity hom = homogeneity_and_class(out.labels, patch_size);
    out.cls = hom.cls;
    out.homogeneity = hom.score;
    out.params = params;
    return out;
}

SynthParams preset_params(int cls, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, 0x5eed));
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    SynthParams p;
    p.seed = seed;
    p.scratch_count = pick(0, 4);
    switch (cls) {
        case 1:
            p.width = pick(320, 512);
            p.height = pick(320, 512);
            p.n_seeds_small = 0;
            p.n_seeds_large = pick(14, 30);
            break;
        case 2:
            p.width = pick(704, 800);
            p.height = pick(704, 800);
            p.n_seeds_small = pick(25, 40);
            p.n_seeds_large = pick(2, 3);
            p.cluster_radius_frac = 0.22 + 0.08 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            break;
        case 3:
            p.width = pick(704, 800);
            p.height = pick(704, 800);
            // A few dominant elongated crystals among many medium ones.
            p.n_seeds_small = pick(40, 55);
            p.n_seeds_large = 2;
            p.cluster_radius_frac = 0.42 + 0.08 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            p.elongation = 2.6 + 0.6 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            p.elongation_angle = std::numbers::pi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            break;
        default:
            throw Error(ErrorCode::BadConfig, "class must be 1, 2 or 3");
    }
    return p;
}

SynthSample generate_class_sample(int cls, std::uint64_t seed, int patch_size, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        try {
            SynthSample s = generate(preset_params(cls, derive_seed(seed, static_cast<std::uint64_t>(attempt))), patch_size);
            if (s.cls == cls) return s;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SynthInfeasible) throw;
        }
    }
    throw Error(ErrorCode::SynthInfeasible, "no class " + std::to_string(cls) + " sample after retries");
}

SplitResult stratified_split(const std::vector<int>& classes, double train, double val, double test,
                             std::uint64_t seed) {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
        throw Error(ErrorCode::BadConfig, "split fractions must be non-negative and sum to 1");
    }
    SplitResult out;
    std::vector<int> keys(classes);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    const double fractions[3] = {train, val, test};
    for (int cls : keys) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (classes[i] == cls) members.push_back(i);
        }
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t n = members.size();
        std::size_t counts[3] = {n, 0, 0};
        if (n < 3) {
            out.undersized_class = true;
        } else {
            // Largest remainder; ties go to the earlier part.
            double rem[3];
            std::size_t assigned = 0;
            for (int k = 0; k < 3; ++k) {
                const double q = fractions[k] * static_cast<double>(n);
                counts[k] = static_cast<std::size_t>(std::floor(q + 1e-9));
                rem[k] = q - static_cast<double>(counts[k]);
                assigned += counts[k];
            }
            int order[3] = {0, 1, 2};
            std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b]; });
            for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
        }
        std::size_t pos = 0;
        std::vector<std::size_t>* parts[3] = {&out.train, &out.val, &out.test};
        for (int k = 0; k < 3; ++k) {
            for (std::size_t c = 0; c < counts[k]; ++c) parts[k]->push_back(members[pos++]);
        }
    }
    for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
    return out;
}

}  // namespace sima
