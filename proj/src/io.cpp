#include "speclaw/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace speclaw {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

json model_to_json(const PopulationModel& model) {
    json atoms = json::array();
    for (const auto& a : model.atoms()) atoms.push_back({{"s", a.s}, {"weight", a.weight}});
    json j{{"phi", model.phi()}, {"atoms", atoms}};
    if (model.dims())
        j["dims"] = {{"M", model.dims()->M}, {"Mhat", model.dims()->Mhat}, {"N", model.dims()->N}};
    return j;
}

PopulationModel model_from_json(const json& j) {
    require_keys(j, {"phi", "atoms", "dims"}, "model");
    if (!j.contains("phi") || !j.contains("atoms")) throw Error("model: phi and atoms required");
    std::vector<SpectralAtom> atoms;
    for (const auto& a : j.at("atoms")) {
        require_keys(a, {"s", "weight"}, "model.atoms[]");
        atoms.push_back({a.at("s").get<double>(), a.at("weight").get<double>()});
    }
    std::optional<ModelDims> dims;
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        require_keys(d, {"M", "Mhat", "N"}, "model.dims");
        dims = ModelDims{d.at("M").get<int>(), d.at("Mhat").get<int>(), d.at("N").get<int>()};
    }
    return PopulationModel(j.at("phi").get<double>(), std::move(atoms), dims);
}

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    if (!j.is_object()) throw Error(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw Error(context + ": unknown key \"" + key + "\"");
    }
}

json profile_to_json(const DensityProfile& profile) {
    json j;
    j["edges"] = json::array();
    for (double a : profile.edges()) j["edges"].push_back(a);
    j["components"] = json::array();
    for (const auto& c : profile.components())
        j["components"].push_back({{"lower", c.lower}, {"upper", c.upper}, {"mass", c.mass}});
    j["atom_mass_at_zero"] = profile.atom_mass_at_zero();
    j["degenerate"] = profile.has_degenerate_edges();
    if (profile.model().dims()) {
        const auto counts = bulk_counts(profile);
        j["counts"] = counts.counts;
    }
    return j;
}

void write_density_csv(const std::filesystem::path& path, const DensityProfile& profile,
                       int points) {
    if (points < 2) throw Error("write_density_csv: need at least two points");
    const auto& comps = profile.components();
    const double lo = comps.back().lower, hi = comps.front().upper;
    const double pad = 0.1 * (hi - lo);
    const double start = std::max(1e-4, lo - pad), stop = hi + pad;

    auto out = open_out(path);
    out << "E,rho\n";
    for (int i = 0; i < points; ++i) {
        const double E = start + (stop - start) * i / (points - 1);
        out << fmt(E) << "," << fmt(density_at(E, profile)) << "\n";
    }
}

void write_gamma_csv(const std::filesystem::path& path, const std::vector<double>& gamma) {
    auto out = open_out(path);
    out << "i,gamma\n";
    for (std::size_t i = 0; i < gamma.size(); ++i)
        out << (i + 1) << "," << fmt(gamma[i]) << "\n";
}

void write_scan_csv(const std::filesystem::path& path, const ErrorScan& scan) {
    auto out = open_out(path);
    out << "z_re,z_im,psi,max_aniso,aniso_ratio,avg_err,avg_ratio,n_vec,seed\n";
    for (const auto& r : scan.records) {
        out << fmt(r.z.real()) << "," << fmt(r.z.imag()) << "," << fmt(r.psi) << ","
            << fmt(r.max_aniso) << "," << fmt(r.aniso_ratio) << "," << fmt(r.avg_err) << ","
            << fmt(r.avg_ratio) << "," << r.n_vec << "," << r.seed << "\n";
    }
    for (const auto& note : scan.notes) out << "# " << note << "\n";
}

void write_edge_samples_csv(const std::filesystem::path& path, const EdgeSampleSet& set) {
    auto out = open_out(path);
    out << "trial";
    for (int j = 0; j < set.depth; ++j) out << ",q" << (j + 1);
    out << "\n";
    for (std::size_t t = 0; t < set.rescaled.size(); ++t) {
        out << t;
        for (int j = 0; j < set.depth; ++j) out << "," << fmt(set.rescaled[t][j]);
        out << "\n";
    }
}

void write_svg_curves(const std::filesystem::path& path, const std::string& title,
                      const std::vector<Curve>& curves, bool log_x) {
    const int W = 800, H = 500, margin = 60;
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& c : curves)
        for (auto [x, y] : c.points) {
            if (log_x) x = std::log10(std::max(x, 1e-300));
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (!(x_max > x_min)) x_max = x_min + 1.0;
    if (!(y_max > y_min)) y_max = y_min + 1.0;

    auto sx = [&](double x) {
        if (log_x) x = std::log10(std::max(x, 1e-300));
        return margin + (W - 2 * margin) * (x - x_min) / (x_max - x_min);
    };
    auto sy = [&](double y) { return H - margin - (H - 2 * margin) * (y - y_min) / (y_max - y_min); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << H - margin << "\" x2=\"" << W - margin
        << "\" y2=\"" << H - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << H - margin << "\" stroke=\"black\"/>\n";
    int ci = 0;
    for (const auto& c : curves) {
        const char* color = colors[ci % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : c.points) out << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
        out << "\"/>\n";
        out << "<text x=\"" << W - margin + 4 << "\" y=\"" << margin + 16 * ci
            << "\" font-size=\"12\" fill=\"" << color << "\">" << c.name << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    json j;
    j["version"] = 1;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["config_hash"] = fnv1a_hash(manifest.config.dump());
    j["seed"] = manifest.seed;
    j["trials"] = manifest.trials;
    j["thresholds"] = manifest.thresholds;
    j["outputs"] = manifest.outputs;
    j["wall_seconds"] = manifest.wall_seconds;
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_sample_binary(const std::filesystem::path& path, const EnsembleSample& sample) {
    auto out = open_out(path, true);
    const char magic[4] = {'S', 'P', 'L', 'W'};
    out.write(magic, 4);
    const std::uint32_t version = 1;
    const std::uint8_t is_complex = sample.is_complex ? 1 : 0;
    const std::uint32_t rows = static_cast<std::uint32_t>(sample.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(sample.cols());
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&is_complex), sizeof is_complex);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(&sample.seed), sizeof sample.seed);
    if (sample.is_complex) {
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) {
                const double re = sample.complex(i, j).real(), im = sample.complex(i, j).imag();
                out.write(reinterpret_cast<const char*>(&re), sizeof re);
                out.write(reinterpret_cast<const char*>(&im), sizeof im);
            }
    } else {
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) {
                const double v = sample.real(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
    }
}

EnsembleSample read_sample_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open sample file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::string(magic, 4) != "SPLW") throw Error("bad sample file magic");
    std::uint32_t version = 0, rows = 0, cols = 0;
    std::uint8_t is_complex = 0;
    EnsembleSample s;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&is_complex), sizeof is_complex);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    in.read(reinterpret_cast<char*>(&s.seed), sizeof s.seed);
    if (version != 1) throw Error("unsupported sample file version");
    s.is_complex = is_complex != 0;
    if (s.is_complex) {
        s.complex.resize(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) {
                double re = 0, im = 0;
                in.read(reinterpret_cast<char*>(&re), sizeof re);
                in.read(reinterpret_cast<char*>(&im), sizeof im);
                s.complex(i, j) = Complex(re, im);
            }
    } else {
        s.real.resize(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j)
                in.read(reinterpret_cast<char*>(&s.real(i, j)), sizeof(double));
    }
    if (!in) throw Error("truncated sample file: " + path.string());
    return s;
}

}  // namespace speclaw
