#include "cli.hpp"

#include "hoa/labels.hpp"
#include "hoa/landmarks.hpp"
#include "hoa/metrics.hpp"
#include "hoa/nifti.hpp"
#include "hoa/phantom.hpp"
#include "hoa/refinement.hpp"
#include "hoa/shape_model.hpp"
#include "hoa/simd/kernels.hpp"
#include "hoa/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#ifndef HOA_VERSION
#define HOA_VERSION "0.0.0"
#endif

namespace hoa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitBelowThreshold = 4;

std::string read_text(const fs::path& path)
{
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, std::string_view text)
{
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), false);
}

/// Run record written next to each output.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), start_(Clock::now()) {}

    Manifest& input(const std::string& key, const fs::path& p)
    {
        inputs_[key] = p.string();
        return *this;
    }
    Manifest& config(const RefinementConfig& cfg)
    {
        for (const auto& [k, v] : to_key_values(cfg)) config_[k] = v;
        return *this;
    }
    Manifest& param(const std::string& key, json value)
    {
        params_[key] = std::move(value);
        return *this;
    }
    Manifest& seed(std::uint64_t s)
    {
        seed_ = s;
        return *this;
    }

    void write_for(const fs::path& output) const
    {
        json doc;
        doc["tool"] = "hoa";
        doc["version"] = HOA_VERSION;
        doc["command"] = command_;
        doc["inputs"] = inputs_;
        doc["output"] = output.string();
        doc["config"] = config_;
        doc["parameters"] = params_;
        doc["seed"] = seed_ ? json(*seed_) : json(nullptr);
        doc["simd"] = std::string(to_string(simd::active_isa()));
        doc["elapsed_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
        write_text(output.string() + ".manifest.json", doc.dump(2) + "\n");
    }

private:
    std::string command_;
    json inputs_ = json::object();
    json config_ = json::object();
    json params_ = json::object();
    std::optional<std::uint64_t> seed_;
    Clock::time_point start_;
};

struct RefineFlags {
    std::string config_path;
    bool slice_adjust = false;
    bool partial_rules = false;
    std::optional<int> jobs;
};

void add_refine_flags(CLI::App* cmd, RefineFlags& f)
{
    cmd->add_option("--config", f.config_path, "key = value refinement config (falls back to $HOA_REFINE_CONFIG)");
    cmd->add_flag("--slice-adjust", f.slice_adjust, "Adjust the midline per coronal slice");
    cmd->add_flag("--partial-rules", f.partial_rules, "Skip rules whose landmarks are missing");
}

/// defaults < config file < flags
RefinementConfig resolve_config(const RefineFlags& f)
{
    RefinementConfig cfg;
    std::string path = f.config_path;
    if (path.empty())
        if (const char* env = std::getenv("HOA_REFINE_CONFIG"); env && *env) path = env;
    if (!path.empty()) apply_key_values(cfg, parse_key_value_text(read_text(path)));
    if (f.slice_adjust) cfg.slice_adjust = true;
    if (f.partial_rules) cfg.partial_rules = true;
    if (f.jobs) {
        if (*f.jobs < 1) throw ValidationError("--jobs must be at least 1");
        cfg.threads = *f.jobs;
    }
    return cfg;
}

std::optional<NiftiDatatype> integer_type_of(const NiftiImage& img)
{
    if (is_integer_datatype(img.datatype)) return img.datatype;
    return std::nullopt;
}

LabelVolume as_labels(NiftiImage img, const fs::path& path)
{
    if (auto* v = std::get_if<LabelVolume>(&img.volume)) return std::move(*v);
    throw ValidationError(path.string() + ": label volumes must use an integer datatype");
}

void refine_file(const fs::path& in, const fs::path& landmarks, const fs::path& out, const RefinementConfig& cfg,
                 const std::string& command)
{
    Manifest m(command);
    m.input("fused", in).input("landmarks", landmarks).config(cfg);
    NiftiImage img = read_nifti(in);
    const auto dt = integer_type_of(img);
    const LabelVolume vol12 = as_labels(std::move(img), in);
    const LandmarkSet lms = parse_landmarks(landmarks);
    const LabelVolume vol26 = refine_full(vol12, lms, cfg);
    write_volume(vol26, out, dt);
    m.write_for(out);
}

std::vector<fs::path> sibling_outputs(const fs::path& out, const std::string& format)
{
    fs::path other = out;
    other.replace_extension(format == "json" ? ".csv" : ".json");
    return {out, other};
}

int cmd_roundtrip(const fs::path& gt_path, const fs::path& lm_path, const RefinementConfig& cfg, double threshold,
                  const std::string& report_path)
{
    const LabelVolume gt = read_label_volume(gt_path);
    const LandmarkSet lms = parse_landmarks(lm_path);
    const LabelVolume fused = fuse_labels(gt);
    const LabelVolume refined = refine_full(fused, lms, cfg);
    const MetricReport rep = evaluate_pair(refined, gt, lms, gt_path.filename().string());
    std::printf("mean_dice=%.6f mean_pasd=%s\n", rep.mean_dice,
                rep.mean_pasd ? std::to_string(*rep.mean_pasd).c_str() : "NA");
    if (!report_path.empty()) {
        write_text(report_path, rep.to_json());
        Manifest("roundtrip").input("labels", gt_path).input("landmarks", lm_path).config(cfg).param("threshold", threshold).write_for(report_path);
    }
    if (rep.mean_dice < threshold) {
        std::fprintf(stderr, "hoa: mean Dice %.6f below threshold %.6f\n", rep.mean_dice, threshold);
        return kExitBelowThreshold;
    }
    return 0;
}

struct CohortRow {
    std::string subject;
    fs::path fused, landmarks, output;
};

std::vector<CohortRow> read_cohort(const fs::path& list)
{
    std::istringstream is(read_text(list));
    const fs::path base = list.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<CohortRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 4)
            throw ValidationError(list.string() + ":" + std::to_string(lineno) +
                                  ": expected subject,fused,landmarks,output");
        if (lineno == 1 && f[0] == "subject") continue;
        rows.push_back({f[0], resolve(f[1]), resolve(f[2]), resolve(f[3])});
    }
    if (rows.empty()) throw ValidationError(list.string() + ": no subjects listed");
    return rows;
}

int run_guarded(const std::function<int()>& fn, const std::string& context = {})
{
    const std::string prefix = context.empty() ? "hoa: " : "hoa: " + context + ": ";
    try {
        return fn();
    } catch (const Error& e) {
        std::fprintf(stderr, "%s%s\n", prefix.c_str(), e.what());
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "%s%s\n", prefix.c_str(), e.what());
        return int(ErrorKind::Io);
    } catch (const std::bad_alloc&) {
        std::fprintf(stderr, "%sout of memory\n", prefix.c_str());
        return int(ErrorKind::Io);
    }
}

int cmd_cohort(const fs::path& list, const RefinementConfig& base_cfg, int jobs)
{
    const auto rows = read_cohort(list);
    RefinementConfig cfg = base_cfg;
    cfg.threads = 1;
    std::vector<int> codes(rows.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            const CohortRow& r = rows[i];
            codes[i] = run_guarded([&] {
                refine_file(r.fused, r.landmarks, r.output, cfg, "cohort");
                return 0;
            }, r.subject);
        }
    };
    const int n = std::max(1, std::min<int>(jobs, int(rows.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int worst = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::printf("%s,%s\n", rows[i].subject.c_str(), codes[i] == 0 ? "ok" : ("exit " + std::to_string(codes[i])).c_str());
        if (worst == 0) worst = codes[i];
    }
    return worst;
}

Eigen::VectorXd read_vector_json(const fs::path& path)
{
    try {
        const auto v = json::parse(read_text(path)).get<std::vector<double>>();
        return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": expected a JSON array of numbers (" + e.what() + ")");
    }
}

std::string vector_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size())).dump() + "\n";
}

std::unique_ptr<DisplacementPredictor> make_predictor(const std::string& kind, const LandmarkConfiguration& target,
                                                      double confidence, double noise, std::uint64_t seed)
{
    if (kind == "oracle") return std::make_unique<OraclePredictor>(target, confidence);
    if (kind == "noisy") return std::make_unique<NoisyOraclePredictor>(target, noise, confidence, seed);
    if (kind == "zero") return std::make_unique<ZeroPredictor>();
    throw ValidationError("unknown predictor '" + kind + "' (expected oracle, noisy or zero)");
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"Landmark-guided subcortical label fusion, refinement and evaluation", "hoa"};
    app.set_version_flag("--version", HOA_VERSION);
    app.require_subcommand(1);

    std::function<int()> action;
    RefineFlags rf;

    // fuse
    std::string fuse_in, fuse_out;
    auto* fuse = app.add_subcommand("fuse", "Collapse a 26-label volume to 12 labels");
    fuse->add_option("input", fuse_in, "26-label NIfTI")->required();
    fuse->add_option("output", fuse_out, "12-label NIfTI")->required();
    fuse->callback([&] {
        action = [&] {
            Manifest m("fuse");
            m.input("labels", fuse_in);
            NiftiImage img = read_nifti(fuse_in);
            const auto dt = integer_type_of(img);
            const LabelVolume out = fuse_labels(as_labels(std::move(img), fuse_in));
            write_volume(out, fuse_out, dt);
            m.write_for(fuse_out);
            return 0;
        };
    });

    // refine
    std::string ref_in, ref_out, ref_lm;
    auto* refine = app.add_subcommand("refine", "Reconstruct 26 labels from a 12-label volume and landmarks");
    refine->add_option("input", ref_in, "12-label NIfTI")->required();
    refine->add_option("output", ref_out, "26-label NIfTI")->required();
    refine->add_option("--landmarks", ref_lm, "Landmark JSON (world mm)")->required();
    refine->add_option("--jobs", rf.jobs, "Worker threads; output does not depend on it");
    add_refine_flags(refine, rf);
    refine->callback([&] {
        action = [&] {
            refine_file(ref_in, ref_lm, ref_out, resolve_config(rf), "refine");
            return 0;
        };
    });

    // evaluate
    std::string ev_pred, ev_gt, ev_lm, ev_out, ev_format = "json", ev_pred_lm, ev_subject;
    auto* evaluate = app.add_subcommand("evaluate", "Dice, PASD and line metrics of a prediction against a reference");
    evaluate->add_option("prediction", ev_pred, "Predicted 26-label NIfTI")->required();
    evaluate->add_option("reference", ev_gt, "Reference 26-label NIfTI")->required();
    evaluate->add_option("--landmarks", ev_lm, "Reference landmarks")->required();
    evaluate->add_option("--output,-o", ev_out, "Report path; the other format is written beside it")->required();
    evaluate->add_option("--format", ev_format, "Format of --output")->check(CLI::IsMember({"json", "csv"}));
    evaluate->add_option("--predicted-landmarks", ev_pred_lm, "Adds landmark errors to the report");
    evaluate->add_option("--subject", ev_subject, "Subject id for the report");
    evaluate->callback([&] {
        action = [&] {
            Manifest m("evaluate");
            m.input("prediction", ev_pred).input("reference", ev_gt).input("landmarks", ev_lm);
            const LabelVolume pred = read_label_volume(ev_pred);
            const LabelVolume gt = read_label_volume(ev_gt);
            const LandmarkSet lms = parse_landmarks(ev_lm);
            MetricReport rep = evaluate_pair(pred, gt, lms, ev_subject.empty() ? fs::path(ev_pred).stem().string() : ev_subject);
            if (!ev_pred_lm.empty()) {
                m.input("predicted_landmarks", ev_pred_lm);
                add_landmark_errors(rep, parse_landmarks(ev_pred_lm), lms);
            }
            const auto outs = sibling_outputs(ev_out, ev_format);
            write_text(outs[0], ev_format == "json" ? rep.to_json() : rep.to_csv());
            write_text(outs[1], ev_format == "json" ? rep.to_csv() : rep.to_json());
            m.write_for(outs[0]);
            for (const auto& w : rep.warnings) std::fprintf(stderr, "hoa: warning: %s\n", w.c_str());
            return 0;
        };
    });

    // roundtrip
    std::string rt_in, rt_lm, rt_report;
    double rt_threshold = 0.999;
    auto* roundtrip = app.add_subcommand("roundtrip", "Fuse, refine and score a 26-label volume against itself");
    roundtrip->add_option("input", rt_in, "26-label NIfTI")->required();
    roundtrip->add_option("--landmarks", rt_lm, "Landmark JSON")->required();
    roundtrip->add_option("--threshold", rt_threshold, "Minimum mean Dice for exit 0");
    roundtrip->add_option("--report", rt_report, "Optional JSON report path");
    add_refine_flags(roundtrip, rf);
    roundtrip->callback([&] {
        action = [&] { return cmd_roundtrip(rt_in, rt_lm, resolve_config(rf), rt_threshold, rt_report); };
    });

    // stats
    std::string st_a, st_b, st_out;
    double st_q = 0.05;
    auto* stats = app.add_subcommand("stats", "Paired Wilcoxon signed-rank tests with Benjamini-Hochberg correction");
    stats->add_option("method_a", st_a, "Long-format metric CSV for method A")->required();
    stats->add_option("method_b", st_b, "Long-format metric CSV for method B")->required();
    stats->add_option("--q", st_q, "FDR level");
    stats->add_option("--output,-o", st_out, "CSV path (stdout if omitted)");
    stats->callback([&] {
        action = [&] {
            const auto table = paired_table_from_csv(read_text(st_a), read_text(st_b));
            const std::string csv = stats_to_csv(wilcoxon_fdr(table, st_q));
            if (st_out.empty()) {
                std::fputs(csv.c_str(), stdout);
            } else {
                write_text(st_out, csv);
                Manifest("stats").input("method_a", st_a).input("method_b", st_b).param("q", st_q).write_for(st_out);
            }
            return 0;
        };
    });

    // phantom
    std::string ph_out, ph_lm, ph_fused;
    std::uint64_t ph_seed = 0;
    bool ph_no_jitter = false;
    std::vector<int> ph_dims;
    auto* phantom = app.add_subcommand("phantom", "Write a synthetic protocol-consistent 26-label phantom");
    phantom->add_option("output", ph_out, "26-label NIfTI")->required();
    phantom->add_option("--landmarks-out", ph_lm, "Landmark JSON path")->required();
    phantom->add_option("--fused-out", ph_fused, "Also write the fused 12-label volume");
    phantom->add_option("--seed", ph_seed, "Generator seed");
    phantom->add_option("--dims", ph_dims, "Grid size (three values, each at least 96)")->expected(3);
    phantom->add_flag("--no-jitter", ph_no_jitter, "Disable seeded shifts and tilt");
    phantom->callback([&] {
        action = [&] {
            PhantomSpec spec;
            spec.seed = ph_seed;
            spec.jitter = !ph_no_jitter;
            if (!ph_dims.empty()) spec.dims = Dims{{ph_dims[0], ph_dims[1], ph_dims[2]}};
            const Phantom ph = generate_phantom(spec);
            Manifest m("phantom");
            m.seed(ph_seed).param("jitter", spec.jitter);
            write_volume(ph.labels, ph_out);
            write_landmarks(ph.landmarks, ph_lm);
            m.write_for(ph_out);
            if (!ph_fused.empty()) {
                write_volume(fuse_labels(ph.labels), ph_fused);
                m.write_for(ph_fused);
            }
            std::printf("hash=%016llx\n", static_cast<unsigned long long>(phantom_hash(ph.labels, ph.landmarks)));
            return 0;
        };
    });

    // degrade
    std::string dg_in, dg_lm, dg_out, dg_lm_out, dg_mode = "none";
    DegradeSpec dg;
    auto* degrade = app.add_subcommand("degrade", "Fuse a 26-label volume and perturb labels or landmarks");
    degrade->add_option("input", dg_in, "26-label NIfTI")->required();
    degrade->add_option("output", dg_out, "Perturbed 12-label NIfTI")->required();
    degrade->add_option("--landmarks", dg_lm, "Landmark JSON")->required();
    degrade->add_option("--landmarks-out", dg_lm_out, "Perturbed landmark JSON")->required();
    degrade->add_option("--mode", dg_mode, "none, boundary-noise, erosion or landmark-jitter");
    degrade->add_option("--sigma", dg.sigma_mm, "Landmark jitter sd per axis, mm");
    degrade->add_option("--fraction", dg.flip_fraction, "Share of interface voxels relabelled");
    degrade->add_option("--seed", dg.seed, "Perturbation seed");
    degrade->callback([&] {
        action = [&] {
            dg.mode = parse_degrade_mode(dg_mode);
            const Degraded out = degrade_phantom(read_label_volume(dg_in), parse_landmarks(dg_lm), dg);
            write_volume(out.fused, dg_out);
            write_landmarks(out.landmarks, dg_lm_out);
            Manifest("degrade")
                .input("labels", dg_in)
                .input("landmarks", dg_lm)
                .seed(dg.seed)
                .param("mode", dg_mode)
                .param("sigma_mm", dg.sigma_mm)
                .param("fraction", dg.flip_fraction)
                .write_for(dg_out);
            return 0;
        };
    });

    // cohort
    std::string co_list;
    auto* cohort = app.add_subcommand("cohort", "Refine every subject of a list, in parallel across subjects");
    cohort->add_option("list", co_list, "CSV of subject,fused,landmarks,output")->required();
    cohort->add_option("--jobs", rf.jobs, "Subjects processed concurrently");
    add_refine_flags(cohort, rf);
    cohort->callback([&] {
        action = [&] {
            const int jobs = rf.jobs.value_or(1);
            RefineFlags single = rf;
            single.jobs = 1;
            if (jobs < 1) throw ValidationError("--jobs must be at least 1");
            return cmd_cohort(co_list, resolve_config(single), jobs);
        };
    });

    // shape
    auto* shape = app.add_subcommand("shape", "Landmark shape model");
    shape->require_subcommand(1);

    std::string sf_out;
    std::vector<std::string> sf_inputs;
    std::optional<double> sf_threshold;
    std::optional<int> sf_modes;
    auto* sfit = shape->add_subcommand("fit", "Fit a PCA model to landmark sets");
    sfit->add_option("output", sf_out, "Model JSON")->required();
    sfit->add_option("landmarks", sf_inputs, "Complete landmark JSON files")->required();
    auto* thr = sfit->add_option("--threshold", sf_threshold, "Keep modes up to this variance fraction");
    sfit->add_option("--modes", sf_modes, "Keep exactly this many modes")->excludes(thr);
    sfit->callback([&] {
        action = [&] {
            std::vector<LandmarkConfiguration> configs;
            for (const auto& p : sf_inputs) configs.push_back(to_configuration(parse_landmarks(p)));
            ModeSelector sel = ModeSelector::all_nonzero();
            if (sf_threshold) sel = ModeSelector::variance_threshold(*sf_threshold);
            if (sf_modes) sel = ModeSelector::fixed(*sf_modes);
            const ShapeModel model = fit_shape_model(configs, sel);
            write_text(sf_out, model.to_json());
            Manifest("shape fit").param("inputs", sf_inputs).param("n_modes", model.n_modes()).write_for(sf_out);
            std::printf("n_b=%d variance_retained=%.6f\n", model.n_modes(), model.variance_fraction_retained());
            return 0;
        };
    });

    std::string sa_model, sa_lm, sa_params, sa_out;
    auto* sapply = shape->add_subcommand("apply", "Project landmarks to parameters, or reconstruct landmarks from parameters");
    sapply->add_option("model", sa_model, "Model JSON")->required();
    auto* sa_l = sapply->add_option("--landmarks", sa_lm, "Landmarks to project");
    sapply->add_option("--params", sa_params, "JSON array of shape parameters to reconstruct")->excludes(sa_l);
    sapply->add_option("--output,-o", sa_out, "Parameters (JSON array) or landmarks (JSON)")->required();
    sapply->callback([&] {
        action = [&] {
            const ShapeModel model = ShapeModel::from_json(read_text(sa_model));
            if (!sa_lm.empty()) {
                const LandmarkConfiguration x = to_configuration(parse_landmarks(sa_lm));
                const ShapeParams b = model.project(x);
                const double residual = (model.reconstruct(b) - x).norm();
                write_text(sa_out, vector_json(b));
                std::printf("residual_norm=%.9g\n", residual);
            } else if (!sa_params.empty()) {
                write_landmarks(to_landmark_set(model.reconstruct(read_vector_json(sa_params))), sa_out);
            } else {
                throw ValidationError("shape apply needs --landmarks or --params");
            }
            Manifest("shape apply").input("model", sa_model).write_for(sa_out);
            return 0;
        };
    });

    std::string si_model, si_target, si_pred = "oracle", si_init = "mean";
    int si_steps = 10;
    double si_conf = 1.0, si_noise = 0.0;
    std::uint64_t si_seed = 0;
    auto* siter = shape->add_subcommand("iterate", "Confidence-weighted iterative fit toward a target");
    siter->add_option("model", si_model, "Model JSON")->required();
    siter->add_option("--target", si_target, "Target landmark JSON")->required();
    siter->add_option("--predictor", si_pred, "oracle, noisy or zero");
    siter->add_option("--steps", si_steps, "Iterations");
    siter->add_option("--confidence", si_conf, "Confidence applied to every mode");
    siter->add_option("--noise", si_noise, "Noise sd of the noisy predictor");
    siter->add_option("--seed", si_seed, "Noise seed");
    siter->add_option("--init", si_init, "Start from the mean shape (mean) or a parameter file");
    siter->callback([&] {
        action = [&] {
            const ShapeModel model = ShapeModel::from_json(read_text(si_model));
            const LandmarkConfiguration target = to_configuration(parse_landmarks(si_target));
            const ShapeParams b0 = si_init == "mean" ? ShapeParams(ShapeParams::Zero(model.n_modes()))
                                                     : read_vector_json(si_init);
            auto predictor = make_predictor(si_pred, target, si_conf, si_noise, si_seed);
            const auto traj = iterate_fit(model, *predictor, b0, si_steps);
            std::printf("step,mean_error_mm\n");
            std::optional<int> converged;
            for (std::size_t t = 0; t < traj.size(); ++t) {
                const double err = landmark_error(traj[t].x, target).mean;
                std::printf("%zu,%.9g\n", t, err);
                if (!converged && t > 0 && (traj[t].b - traj[t - 1].b).norm() == 0.0) converged = int(t) - 1;
            }
            if (converged) std::printf("converged after %d step(s)\n", *converged);
            return 0;
        };
    });

    std::string ss_lm, ss_out;
    int ss_id = lm::AC;
    double ss_radius = 3.0;
    std::size_t ss_count = 64;
    std::uint64_t ss_seed = 0;
    auto* ssample = shape->add_subcommand("sample", "Sample training patch centers around a landmark");
    ssample->add_option("--landmarks", ss_lm, "Landmark JSON")->required();
    ssample->add_option("--id", ss_id, "Landmark id");
    ssample->add_option("--radius", ss_radius, "Radius holding 95% of the displacements, mm");
    ssample->add_option("--count", ss_count, "Number of centers");
    ssample->add_option("--seed", ss_seed, "Sampler seed");
    ssample->add_option("--output,-o", ss_out, "CSV path (stdout if omitted)");
    ssample->callback([&] {
        action = [&] {
            const LandmarkSet lms = parse_landmarks(ss_lm);
            const auto centers = sample_patch_centers(lms.at(ss_id), ss_radius, ss_count, ss_seed, ss_id);
            std::ostringstream os;
            os << "landmark,x,y,z,side\n";
            char buf[128];
            for (const auto& c : centers) {
                std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%d\n", c.landmark_id, c.center.x, c.center.y,
                              c.center.z, c.side);
                os << buf;
            }
            if (ss_out.empty()) {
                std::fputs(os.str().c_str(), stdout);
            } else {
                write_text(ss_out, os.str());
                Manifest("shape sample").input("landmarks", ss_lm).seed(ss_seed).param("radius_mm", ss_radius).write_for(ss_out);
            }
            std::fprintf(stderr, "sigma=%.9g\n", derive_sigma(ss_radius));
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return int(ErrorKind::Validation);
    }
    return run_guarded(action);
}

} // namespace hoa
