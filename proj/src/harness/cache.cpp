#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "mgthmm/harness.hpp"

namespace mgthmm {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'G', 'T', 'R', 'E', 'F', '0', '1'};

struct Fnv {
    std::uint64_t h = 1469598103934665603ULL;
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    }
    void text(const std::string& s) { bytes(s.data(), s.size()); }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& is, T& v) {
    return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof v));
}

std::uint64_t payload_hash(const ReferenceTrajectory& r) {
    Fnv f;
    for (const auto& s : r.states) f.bytes(s.data(), sizeof(double) * static_cast<std::size_t>(s.size()));
    return f.h;
}

}  // namespace

const Vec& ReferenceTrajectory::at(double t) const {
    if (!(dt_sample > 0.0) || states.empty()) throw ConfigError("reference trajectory is empty");
    const double ratio = t / dt_sample;
    const long long n = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-6 || n < 0 || n >= static_cast<long long>(states.size())) {
        throw ConfigError("time " + num(t) + " is not a reference sample");
    }
    return states[static_cast<std::size_t>(n)];
}

double reference_step(double eps, double dt_coupled, double dt_sample) {
    if (!(eps > 0.0) || !(dt_coupled > 0.0) || !(dt_sample > 0.0)) throw ConfigError("reference_step: bad arguments");
    const double h = std::min(dt_coupled, 0.1 * eps);
    const double n = std::ceil(dt_sample / h - 1e-9);
    return dt_sample / n;
}

std::uint64_t reference_key(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T) {
    std::ostringstream os;
    os << "v1;" << to_string(sys.id) << ";eps=" << num(sys.eps);
    for (const auto& [k, v] : sys.params) os << ';' << k << '=' << num(v);
    os << ";x0=";
    for (double v : sys.x0) os << num(v) << ',';
    os << ";y0=";
    for (double v : sys.y0) os << num(v) << ',';
    os << ";dt_ref=" << num(dt_ref) << ";dt_sample=" << num(dt_sample) << ";T=" << num(T);
    Fnv f;
    f.text(os.str());
    return f.h;
}

ReferenceTrajectory compute_reference(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T) {
    const long long every = std::llround(dt_sample / dt_ref);
    if (every < 1 || std::abs(static_cast<double>(every) * dt_ref - dt_sample) > 1e-9 * dt_sample) {
        throw ConfigError("reference step must divide the sample step");
    }
    step_count(0.0, T, dt_sample);
    const RunRecord rec = solve_reference(sys, sys.x0, sys.y0, dt_ref, T, every);
    ReferenceTrajectory out;
    out.dt_sample = dt_sample;
    out.dt_ref = dt_ref;
    out.states = rec.states;
    out.counters = rec.counters;
    out.wall_ms = rec.wall_ms;
    return out;
}

ReferenceCache::ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ReferenceCache::path_for(std::uint64_t key) const {
    char name[40];
    std::snprintf(name, sizeof name, "ref-%016llx.bin", static_cast<unsigned long long>(key));
    return dir_ / name;
}

std::optional<ReferenceTrajectory> ReferenceCache::load(std::uint64_t key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) return std::nullopt;
    std::uint64_t stored_key = 0, n = 0, dim = 0, checksum = 0;
    ReferenceTrajectory r;
    if (!get(in, stored_key) || stored_key != key) return std::nullopt;
    if (!get(in, n) || !get(in, dim) || !get(in, r.dt_sample) || !get(in, r.dt_ref)) return std::nullopt;
    if (!get(in, r.counters.micro_calls) || !get(in, r.counters.micro_solves) || !get(in, r.counters.f_evals) ||
        !get(in, r.counters.g_evals) || !get(in, r.wall_ms)) {
        return std::nullopt;
    }
    if (n == 0 || dim == 0 || n > (1ULL << 32) || dim > (1ULL << 20)) return std::nullopt;
    r.states.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Vec v(static_cast<Eigen::Index>(dim));
        if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * dim))) {
            return std::nullopt;
        }
        r.states.push_back(std::move(v));
    }
    if (!get(in, checksum) || checksum != payload_hash(r)) return std::nullopt;
    return r;
}

void ReferenceCache::store(std::uint64_t key, const ReferenceTrajectory& r) const {
    if (!enabled() || r.states.empty()) return;
    std::filesystem::create_directories(dir_);
    const auto final_path = path_for(key);
    std::ostringstream suffix;
    suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << std::random_device{}();
    const auto tmp = std::filesystem::path(final_path.string() + suffix.str());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write reference cache file " + tmp.string());
        out.write(kMagic.data(), kMagic.size());
        put(out, key);
        put(out, static_cast<std::uint64_t>(r.states.size()));
        put(out, static_cast<std::uint64_t>(r.states.front().size()));
        put(out, r.dt_sample);
        put(out, r.dt_ref);
        put(out, r.counters.micro_calls);
        put(out, r.counters.micro_solves);
        put(out, r.counters.f_evals);
        put(out, r.counters.g_evals);
        put(out, r.wall_ms);
        for (const auto& s : r.states) {
            out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * s.size()));
        }
        put(out, payload_hash(r));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
}

ReferenceTrajectory get_reference(const FastSlowSystem& sys, double dt_ref, double dt_sample, double T,
                                  const ReferenceCache& cache, bool* from_cache) {
    const std::uint64_t key = reference_key(sys, dt_ref, dt_sample, T);
    if (auto hit = cache.load(key)) {
        if (from_cache) *from_cache = true;
        return *hit;
    }
    if (from_cache) *from_cache = false;
    ReferenceTrajectory r = compute_reference(sys, dt_ref, dt_sample, T);
    cache.store(key, r);
    return r;
}

}  // namespace mgthmm
