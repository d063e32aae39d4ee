#include "dlab/experiments/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dlab {

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

std::string fixed(double v, int digits = 2)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr std::array<const char*, 9> kPalette = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                 "#edc948", "#b07aa1", "#ff9da7", "#bab0ac"};

// Fixed 640x400 canvas with a 60px left / 40px bottom margin.
class Svg {
public:
    static constexpr double kWidth = 640, kHeight = 400;
    static constexpr double kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;

    explicit Svg(const std::string& title)
    {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2, 18, title, "middle", 14);
    }

    static double px(double t) { return kLeft + t * (kWidth - kLeft - kRight); }
    static double py(double t) { return kHeight - kBottom - t * (kHeight - kTop - kBottom); }

    void axes(const std::string& xlabel, const std::string& ylabel)
    {
        line(px(0), py(0), px(1), py(0), "black");
        line(px(0), py(0), px(0), py(1), "black");
        text(px(0.5), kHeight - 12, xlabel, "middle", 12);
        out_ << "<text x=\"14\" y=\"" << fixed(py(0.5)) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
             << fixed(py(0.5)) << ")\">" << escape_xml(ylabel) << "</text>\n";
    }

    void line(double x1, double y1, double x2, double y2, const char* stroke, double width = 1)
    {
        out_ << "<line x1=\"" << fixed(x1) << "\" y1=\"" << fixed(y1) << "\" x2=\"" << fixed(x2) << "\" y2=\"" << fixed(y2)
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fixed(width, 1) << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, const char* anchor = "start", int size = 10)
    {
        out_ << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" text-anchor=\"" << anchor << "\" font-size=\"" << size
             << "\">" << escape_xml(s) << "</text>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = {})
    {
        out_ << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"" << fixed(std::max(w, 0.0)) << "\" height=\""
             << fixed(std::max(h, 0.0)) << "\" fill=\"" << fill << '"' << extra << "/>\n";
    }

    void circle(double x, double y, double r, const char* fill)
    {
        out_ << "<circle cx=\"" << fixed(x) << "\" cy=\"" << fixed(y) << "\" r=\"" << fixed(r, 1) << "\" fill=\"" << fill
             << "\" fill-opacity=\"0.6\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke, const std::string& id)
    {
        out_ << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) out_ << (i ? " " : "") << fixed(pts[i].first) << ',' << fixed(pts[i].second);
        out_ << "\"/>\n";
    }

    void raw(const std::string& s) { out_ << s; }

    std::string finish()
    {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    std::ostringstream out_;
};

const std::array<const AblationArm*, 3> arms_of(const AblationStudyResult& r)
{
    return {&r.baseline, &r.dense_ablated, &r.sparse_ablated};
}

std::string histogram_svg(const AblationStudyResult* r)
{
    Svg svg("Latent density by arm");
    svg.axes("log10 density (leftmost bar: exactly zero)", "latents");
    const auto edges = density_histogram(VectorXd::Zero(1)).edges;
    std::string edge_list;
    for (std::size_t i = 0; i < edges.size(); ++i) edge_list += (i ? " " : "") + format_number(edges[i]);
    svg.raw("<g id=\"bin-edges\" data-edges=\"" + edge_list + "\"></g>\n");
    // x: zero bin occupies [0, 1/12), log bins span [1/12, 1].
    constexpr double zero_w = 1.0 / 12.0;
    auto x_of_edge = [&](std::size_t i) { return zero_w + (1.0 - zero_w) * static_cast<double>(i) / DensityHistogram::kBins; };
    for (int e = -5; e <= 0; ++e) {
        const double t = zero_w + (1.0 - zero_w) * (e + 5) / 5.0;
        svg.line(Svg::px(t), Svg::py(0), Svg::px(t), Svg::py(0) + 4, "black");
        svg.text(Svg::px(t), Svg::py(0) + 16, std::to_string(e), "middle");
    }
    if (!r) return svg.finish();

    std::size_t top = 1;
    for (const auto* arm : arms_of(*r)) {
        top = std::max(top, arm->histogram.zero);
        for (auto c : arm->histogram.counts) top = std::max(top, c);
    }
    svg.text(Svg::px(0) - 4, Svg::py(1) + 4, std::to_string(top), "end");
    const double scale = 1.0 / static_cast<double>(top);
    std::size_t series = 0;
    for (const auto* arm : arms_of(*r)) {
        const auto* colour = kPalette[series];
        const auto& h = arm->histogram;
        std::vector<std::pair<double, double>> pts;
        pts.emplace_back(Svg::px(0), Svg::py(0));
        pts.emplace_back(Svg::px(0), Svg::py(h.zero * scale));
        pts.emplace_back(Svg::px(zero_w), Svg::py(h.zero * scale));
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            pts.emplace_back(Svg::px(x_of_edge(b)), Svg::py(h.counts[b] * scale));
            pts.emplace_back(Svg::px(x_of_edge(b + 1)), Svg::py(h.counts[b] * scale));
        }
        pts.emplace_back(Svg::px(1), Svg::py(0));
        svg.polyline(pts, colour, "series-" + arm->name);
        svg.rect(Svg::px(0.72), Svg::kTop + 4 + 14.0 * static_cast<double>(series), 10, 10, colour);
        svg.text(Svg::px(0.72) + 14, Svg::kTop + 13 + 14.0 * static_cast<double>(series), arm->name);
        ++series;
    }
    return svg.finish();
}

std::string scatter_svg(const std::vector<LatentProfile>* profiles)
{
    Svg svg("Antipodality vs density");
    svg.axes("log10 density (zero plotted at -6)", "antipodality score");
    for (int e = -6; e <= 0; ++e) svg.text(Svg::px((e + 6) / 6.0), Svg::py(0) + 16, std::to_string(e), "middle");
    svg.text(Svg::px(0) - 4, Svg::py(0) + 4, "-1", "end");
    svg.text(Svg::px(0) - 4, Svg::py(0.5) + 4, "0", "end");
    svg.text(Svg::px(0) - 4, Svg::py(1) + 4, "1", "end");
    if (!profiles) return svg.finish();
    for (const auto& p : *profiles) {
        const double lx = p.density > 0.0 ? std::max(std::log10(p.density), -6.0) : -6.0;
        svg.circle(Svg::px((lx + 6.0) / 6.0), Svg::py((std::clamp(p.antipodality, -1.0, 1.0) + 1.0) / 2.0), 2.0, kPalette[0]);
    }
    return svg.finish();
}

std::string heatmap_svg(const AngleMatrix* m, const std::vector<std::string>& labels)
{
    Svg svg("Median principal angle between dense subspaces (degrees)");
    if (!m || m->degrees.rows() == 0) return svg.finish();
    const auto n = m->degrees.rows();
    const double side = std::min(Svg::kWidth - Svg::kLeft - 120, Svg::kHeight - Svg::kTop - Svg::kBottom);
    const double cell = side / static_cast<double>(n);
    auto label = [&](Eigen::Index i) { return i < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(i)] : std::to_string(i); };
    for (Eigen::Index a = 0; a < n; ++a) {
        svg.text(Svg::kLeft - 4, Svg::kTop + (a + 0.5) * cell + 4, label(a), "end");
        svg.text(Svg::kLeft + (a + 0.5) * cell, Svg::kTop + side + 14, label(a), "middle");
        for (Eigen::Index b = 0; b < n; ++b) {
            const double v = m->degrees(a, b);
            const double x = Svg::kLeft + b * cell, y = Svg::kTop + a * cell;
            if (std::isnan(v)) {
                svg.rect(x, y, cell, cell, "#eeeeee");
                svg.text(x + cell / 2, y + cell / 2 + 4, "n/a", "middle");
                continue;
            }
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(v, 0.0, 90.0) / 90.0)));
            char fill[8];
            std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
            svg.rect(x, y, cell, cell, fill);
            svg.text(x + cell / 2, y + cell / 2 + 4, fixed(v, 1), "middle");
        }
    }
    return svg.finish();
}

std::string bars_svg(const std::vector<std::pair<std::string, TaxonomyReport>>& groups)
{
    Svg svg("Taxonomy class counts");
    svg.axes("group", "latents");
    for (int c = 0; c < kTaxonomyClassCount; ++c) {
        const double y = Svg::kTop + 4 + 12.0 * c;
        svg.rect(Svg::kWidth - 150, y, 9, 9, kPalette[static_cast<std::size_t>(c)]);
        svg.text(Svg::kWidth - 137, y + 8, std::string(to_string(static_cast<TaxonomyClass>(c))));
    }
    if (groups.empty()) return svg.finish();
    std::size_t top = 1;
    for (const auto& [name, r] : groups) {
        std::size_t total = 0;
        for (auto c : r.counts) total += c;
        top = std::max(top, total);
    }
    svg.text(Svg::px(0) - 4, Svg::py(1) + 4, std::to_string(top), "end");
    const double plot_w = 0.7;  // leave room for the legend
    const double slot = plot_w / static_cast<double>(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& [name, r] = groups[g];
        double base = 0.0;
        const double x0 = Svg::px(slot * (static_cast<double>(g) + 0.15));
        const double w = Svg::px(slot * 0.7) - Svg::px(0);
        for (int c = 0; c < kTaxonomyClassCount; ++c) {
            const double h = static_cast<double>(r.counts[static_cast<std::size_t>(c)]) / static_cast<double>(top);
            if (h > 0) svg.rect(x0, Svg::py(base + h), w, Svg::py(base) - Svg::py(base + h), kPalette[static_cast<std::size_t>(c)]);
            base += h;
        }
        svg.text(x0 + w / 2, Svg::py(0) + 14, name, "middle");
    }
    return svg.finish();
}

}  // namespace

std::vector<std::string> emit_report(const ReportInputs& in, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& text) {
        write_file(out_dir / name, text);
        written.push_back(name);
    };

    {
        std::string dens = "arm,latent,density\n";
        std::string hist = "arm,bin_low,bin_high,count\n";
        std::string summary = "arm,threshold,count\n";
        std::string telemetry = "arm,step,dense_count\n";
        if (in.ablation) {
            for (const auto* arm : arms_of(*in.ablation)) {
                for (Eigen::Index i = 0; i < arm->density.size(); ++i)
                    dens += arm->name + ',' + std::to_string(i) + ',' + format_number(arm->density(i)) + '\n';
                const auto& h = arm->histogram;
                hist += arm->name + ",0,0," + std::to_string(h.zero) + '\n';
                hist += arm->name + ",0," + format_number(DensityHistogram::kLow) + ',' + std::to_string(h.underflow) + '\n';
                for (std::size_t b = 0; b < h.counts.size(); ++b)
                    hist += arm->name + ',' + format_number(h.edges[b]) + ',' + format_number(h.edges[b + 1]) + ',' + std::to_string(h.counts[b]) + '\n';
                for (std::size_t t = 0; t < kDensityThresholds.size(); ++t)
                    summary += arm->name + ',' + format_number(kDensityThresholds[t]) + ',' + std::to_string(arm->above[t]) + '\n';
                for (const auto& cp : arm->result.telemetry.checkpoints)
                    telemetry += arm->name + ',' + std::to_string(cp.step) + ',' + std::to_string(cp.dense_count) + '\n';
            }
        }
        emit("ablation_densities.csv", dens);
        emit("ablation_histogram.csv", hist);
        emit("ablation_summary.csv", summary);
        emit("density_telemetry.csv", telemetry);
        emit("density_histogram.svg", histogram_svg(in.ablation));
    }

    {
        std::string csv = "latent,density,antipodality,partner,alpha,pc1_cos,topm_pc_fraction,rho_period,rho_newline,rho_bos,"
                          "alphabet_letter,alphabet_metric,alphabet_side,meaningful_auc,bias_cos_abs,degenerate\n";
        if (in.profiles) {
            for (const auto& p : *in.profiles) {
                std::string letter = p.alphabet_letter;
                if (letter.find_first_of(",\"\n") != std::string::npos) letter = '"' + letter + '"';
                csv += std::to_string(p.latent) + ',' + format_number(p.density) + ',' + format_number(p.antipodality) + ',' +
                       std::to_string(p.partner) + ',' + format_number(p.alpha) + ',' + format_number(p.pc1_cos) + ',' +
                       format_number(p.topm_pc_fraction) + ',' + format_number(p.rho_period) + ',' + format_number(p.rho_newline) +
                       ',' + format_number(p.rho_bos) + ',' + letter + ',' + format_number(p.alphabet_metric) + ',' +
                       std::string(to_string(p.alphabet_side)) + ',' + format_number(p.meaningful_auc) + ',' +
                       format_number(p.bias_cos_abs) + ',' + (p.degenerate ? "1" : "0") + '\n';
            }
        }
        emit("profiles.csv", csv);
        emit("antipodality_density.svg", scatter_svg(in.profiles));
    }

    {
        std::string labels = "group,latent,class,score,passed\n";
        std::string counts = "group,class,count,overlap_fraction\n";
        for (const auto& [group, r] : in.taxonomy) {
            for (const auto& l : r.labels) {
                std::string passed;
                for (std::size_t i = 0; i < l.passed.size(); ++i) passed += (i ? ";" : "") + std::string(to_string(l.passed[i]));
                labels += group + ',' + std::to_string(l.latent) + ',' + std::string(to_string(l.cls)) + ',' + format_number(l.score) + ',' + passed + '\n';
            }
            for (int c = 0; c < kTaxonomyClassCount; ++c)
                counts += group + ',' + std::string(to_string(static_cast<TaxonomyClass>(c))) + ',' +
                          std::to_string(r.counts[static_cast<std::size_t>(c)]) + ',' + format_number(r.overlap_fraction) + '\n';
        }
        emit("taxonomy.csv", labels);
        emit("taxonomy_counts.csv", counts);
        emit("taxonomy_bars.svg", bars_svg(in.taxonomy));
    }

    {
        std::string csv = "layer_a,layer_b,median_degrees\n";
        if (in.angles) {
            auto label = [&](Eigen::Index i) {
                return i < static_cast<Eigen::Index>(in.angle_layers.size()) ? in.angle_layers[static_cast<std::size_t>(i)] : std::to_string(i);
            };
            for (Eigen::Index a = 0; a < in.angles->degrees.rows(); ++a)
                for (Eigen::Index b = 0; b < in.angles->degrees.cols(); ++b)
                    csv += label(a) + ',' + label(b) + ',' + format_number(in.angles->degrees(a, b)) + '\n';
        }
        emit("angles.csv", csv);
        emit("angles_heatmap.svg", heatmap_svg(in.angles, in.angle_layers));
    }

    {
        std::string csv = "layer,threshold,fraction\n";
        if (in.fractions) {
            const auto& f = *in.fractions;
            require(f.fractions.rows() == static_cast<Eigen::Index>(f.layers.size()) &&
                        f.fractions.cols() == static_cast<Eigen::Index>(f.thresholds.size()),
                    "density fraction table shape disagrees with its labels");
            for (std::size_t l = 0; l < f.layers.size(); ++l)
                for (std::size_t t = 0; t < f.thresholds.size(); ++t)
                    csv += f.layers[l] + ',' + format_number(f.thresholds[t]) + ',' +
                           format_number(f.fractions(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(t))) + '\n';
        }
        emit("density_fractions.csv", csv);
    }
    return written;
}

}  // namespace dlab
