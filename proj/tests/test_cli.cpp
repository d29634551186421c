#include "cli.hpp"

#include "hoa/metrics.hpp"
#include "hoa/nifti.hpp"
#include "hoa/phantom.hpp"
#include "hoa/shape_model.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hoa;

namespace {

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "hoa");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    return run_cli(int(args.size()), argv.data());
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("hoa_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json manifest(const std::string& output) { return nlohmann::json::parse(slurp(output + ".manifest.json")); }

/// Phantom plus fused volume written into `dir`.
void make_subject(const TempDir& dir, const std::string& name, int seed)
{
    REQUIRE(run({"phantom", dir / (name + ".nii.gz"), "--landmarks-out", dir / (name + ".json"), "--fused-out",
                 dir / (name + "_fused.nii.gz"), "--seed", std::to_string(seed)}) == 0);
}

} // namespace

TEST_CASE("usage errors")
{
    CHECK(run({}) == 2);
    CHECK(run({"bogus"}) == 2);
    CHECK(run({"fuse"}) == 2);
    CHECK(run({"--version"}) == 0);
    CHECK(run({"refine", "a", "b", "--landmarks", "c", "--jobs", "0"}) == 2);
}

TEST_CASE("phantom, fuse, refine, evaluate")
{
    TempDir d;
    make_subject(d, "s0", 0);
    const Phantom p = generate_phantom({});
    const LabelVolume written = read_label_volume(d / "s0.nii.gz");
    CHECK(phantom_hash(written, parse_landmarks(d / "s0.json")) == 0xe1d754142c15735eULL);

    CHECK(run({"fuse", d / "s0.nii.gz", d / "f.nii"}) == 0);
    const NiftiImage fused = read_nifti(d / "f.nii");
    CHECK(fused.datatype == read_nifti(d / "s0.nii.gz").datatype);
    const LabelVolume expect = fuse_labels(p.labels);
    const auto& fv = std::get<LabelVolume>(fused.volume);
    CHECK(std::equal(fv.data().begin(), fv.data().end(), expect.data().begin()));
    CHECK(manifest(d / "f.nii")["command"] == "fuse");

    CHECK(run({"refine", d / "f.nii", d / "r.nii.gz", "--landmarks", d / "s0.json"}) == 0);
    const LabelVolume refined = read_label_volume(d / "r.nii.gz");
    CHECK(std::equal(refined.data().begin(), refined.data().end(), p.labels.data().begin()));
    const auto m = manifest(d / "r.nii.gz");
    for (const char* key : {"tool", "version", "command", "inputs", "output", "config", "parameters", "seed", "simd",
                            "elapsed_ms"})
        CHECK_MESSAGE(m.contains(key), key);
    CHECK(m["config"]["threads"] == "1");

    CHECK(run({"evaluate", d / "r.nii.gz", d / "s0.nii.gz", "--landmarks", d / "s0.json", "-o", d / "rep.json",
               "--subject", "s0", "--predicted-landmarks", d / "s0.json"}) == 0);
    const MetricReport rep = MetricReport::from_json(slurp(d / "rep.json"));
    CHECK(rep.subject == "s0");
    CHECK(rep.mean_dice == 1.0);
    CHECK(rep.landmark_errors.size() == 16);
    CHECK(slurp(d / "rep.csv") == rep.to_csv());
}

TEST_CASE("validation and rule exit codes")
{
    TempDir d;
    make_subject(d, "s", 1);

    LabelVolume bad = read_label_volume(d / "s.nii.gz");
    bad.data()[0] = 27;
    write_volume(bad, d / "bad.nii", NiftiDatatype::Int16);
    CHECK(run({"fuse", d / "bad.nii", d / "out.nii"}) == 2);

    LandmarkSet lms = parse_landmarks(d / "s.json");
    LandmarkSet missing = lms;
    missing.erase(lm::PPF);
    write_landmarks(missing, d / "missing.json");
    CHECK(run({"refine", d / "s_fused.nii.gz", d / "o.nii", "--landmarks", d / "missing.json"}) == 2);

    LandmarkSet collinear = lms;
    const Vec3 ac = lms.at(lm::AC), pc = lms.at(lm::PC);
    collinear.set(lm::PPF, ac + 2.0 * (pc - ac));
    write_landmarks(collinear, d / "collinear.json");
    CHECK(run({"refine", d / "s_fused.nii.gz", d / "o.nii", "--landmarks", d / "collinear.json"}) == 3);

    CHECK(run({"refine", d / "nothere.nii", d / "o.nii", "--landmarks", d / "s.json"}) == 1);
    CHECK(run({"refine", d / "s_fused.nii.gz", d / "o.nii", "--landmarks", d / "nothere.json"}) == 1);
    write(d / "broken.nii", "not a nifti file at all");
    CHECK(run({"refine", d / "broken.nii", d / "o.nii", "--landmarks", d / "s.json"}) == 1);
}

TEST_CASE("roundtrip threshold")
{
    TempDir d;
    make_subject(d, "s", 2);
    CHECK(run({"roundtrip", d / "s.nii.gz", "--landmarks", d / "s.json", "--report", d / "rt.json"}) == 0);
    CHECK(fs::exists(d / "rt.json.manifest.json"));

    LabelVolume v = read_label_volume(d / "s.nii.gz");
    for (auto& l : v.data())
        if (l == fine::VDC_A_L) l = fine::VDC_P_L;
    write_volume(v, d / "broken.nii.gz");
    CHECK(run({"roundtrip", d / "broken.nii.gz", "--landmarks", d / "s.json"}) == 4);
    CHECK(run({"roundtrip", d / "broken.nii.gz", "--landmarks", d / "s.json", "--threshold", "0.5"}) == 0);
}

TEST_CASE("degrade and stats")
{
    TempDir d;
    std::vector<std::string> a_rows, b_rows;
    for (int s = 0; s < 6; ++s) {
        const std::string n = "s" + std::to_string(s);
        make_subject(d, n, 10 + s);
        CHECK(run({"degrade", d / (n + ".nii.gz"), d / (n + "_deg.nii.gz"), "--landmarks", d / (n + ".json"),
                   "--landmarks-out", d / (n + "_deg.json"), "--mode", "landmark-jitter", "--sigma", "1.5", "--seed",
                   std::to_string(s)}) == 0);
        CHECK(manifest(d / (n + "_deg.nii.gz"))["seed"] == s);
        CHECK(run({"refine", d / (n + "_deg.nii.gz"), d / (n + "_a.nii.gz"), "--landmarks", d / (n + "_deg.json")}) == 0);
        CHECK(run({"refine", d / (n + "_fused.nii.gz"), d / (n + "_b.nii.gz"), "--landmarks", d / (n + ".json")}) == 0);
        CHECK(run({"evaluate", d / (n + "_a.nii.gz"), d / (n + ".nii.gz"), "--landmarks", d / (n + ".json"), "-o",
                   d / (n + "_a.csv"), "--format", "csv", "--subject", n}) == 0);
        CHECK(run({"evaluate", d / (n + "_b.nii.gz"), d / (n + ".nii.gz"), "--landmarks", d / (n + ".json"), "-o",
                   d / (n + "_b.csv"), "--format", "csv", "--subject", n}) == 0);
    }
    std::string a = "subject,metric,region,surface,side,value\n", b = a;
    for (int s = 0; s < 6; ++s) {
        const std::string n = "s" + std::to_string(s);
        for (auto [path, acc] : {std::pair{d / (n + "_a.csv"), &a}, std::pair{d / (n + "_b.csv"), &b}}) {
            const std::string text = slurp(path);
            *acc += text.substr(text.find('\n') + 1);
        }
    }
    write(d / "a.csv", a);
    write(d / "b.csv", b);
    CHECK(run({"stats", d / "a.csv", d / "b.csv", "-o", d / "stats.csv", "--q", "0.05"}) == 0);
    const std::string stats = slurp(d / "stats.csv");
    CHECK(stats.rfind("column,n,w_plus,w_minus,p_value,q_value,significant,stars", 0) == 0);
    CHECK(stats.find("dice/") != std::string::npos);

    write(d / "c.csv", "subject,metric,region,surface,side,value\nzz,dice,Put_L,volume,left,1\n");
    CHECK(run({"stats", d / "a.csv", d / "c.csv"}) == 2);
    CHECK(run({"degrade", d / "s0.nii.gz", d / "x.nii", "--landmarks", d / "s0.json", "--landmarks-out", d / "x.json",
               "--mode", "melt"}) == 2);
}

TEST_CASE("cohort output does not depend on --jobs")
{
    TempDir d;
    std::string list1 = "subject,fused,landmarks,output\n", list8 = list1;
    for (int s = 0; s < 5; ++s) {
        const std::string n = "c" + std::to_string(s);
        make_subject(d, n, 30 + s);
        list1 += n + "," + n + "_fused.nii.gz," + n + ".json,out1/" + n + ".nii.gz\n";
        list8 += n + "," + n + "_fused.nii.gz," + n + ".json,out8/" + n + ".nii.gz\n";
    }
    fs::create_directories(d / "out1");
    fs::create_directories(d / "out8");
    write(d / "list1.csv", list1);
    write(d / "list8.csv", list8);
    CHECK(run({"cohort", d / "list1.csv", "--jobs", "1"}) == 0);
    CHECK(run({"cohort", d / "list8.csv", "--jobs", "8"}) == 0);
    for (int s = 0; s < 5; ++s) {
        const std::string n = "c" + std::to_string(s) + ".nii.gz";
        const std::string one = slurp(d / ("out1/" + n)), eight = slurp(d / ("out8/" + n));
        CHECK(!one.empty());
        CHECK(one == eight);
        CHECK(slurp(d / n) == one);
    }

    write(d / "list_bad.csv", "c0,c0_fused.nii.gz,missing.json,out1/x.nii\n");
    CHECK(run({"cohort", d / "list_bad.csv"}) == 1);
    write(d / "list_short.csv", "c0,c0_fused.nii.gz\n");
    CHECK(run({"cohort", d / "list_short.csv"}) == 2);
}

TEST_CASE("config precedence")
{
    TempDir d;
    make_subject(d, "s", 3);
    write(d / "env.cfg", "separator_mode = anterior\nthreads = 3\n");
    write(d / "file.cfg", "separator_mode = posterior\n");
    write(d / "bad.cfg", "no_such_key = 1\n");
    const std::string in = d / "s_fused.nii.gz", lms = d / "s.json";

    ::setenv("HOA_REFINE_CONFIG", (d / "env.cfg").c_str(), 1);
    CHECK(run({"refine", in, d / "o1.nii", "--landmarks", lms}) == 0);
    auto m = manifest(d / "o1.nii");
    CHECK(m["config"]["separator_mode"] == "anterior");
    CHECK(m["config"]["threads"] == "3");

    CHECK(run({"refine", in, d / "o2.nii", "--landmarks", lms, "--config", d / "file.cfg", "--jobs", "2",
               "--slice-adjust"}) == 0);
    m = manifest(d / "o2.nii");
    CHECK(m["config"]["separator_mode"] == "posterior");
    CHECK(m["config"]["threads"] == "2");
    CHECK(m["config"]["slice_adjust"] == "true");
    ::unsetenv("HOA_REFINE_CONFIG");

    CHECK(run({"refine", in, d / "o3.nii", "--landmarks", lms}) == 0);
    CHECK(manifest(d / "o3.nii")["config"]["separator_mode"] == "linear");
    CHECK(run({"refine", in, d / "o4.nii", "--landmarks", lms, "--config", d / "bad.cfg"}) == 2);
    CHECK(run({"refine", in, d / "o4.nii", "--landmarks", lms, "--config", d / "none.cfg"}) == 1);
}

TEST_CASE("shape model commands")
{
    TempDir d;
    std::vector<std::string> args{"shape", "fit", d / "model.json"};
    for (int s = 0; s < 12; ++s) {
        PhantomSpec spec;
        spec.seed = std::uint64_t(100 + s);
        write_landmarks(generate_phantom(spec).landmarks, d / ("l" + std::to_string(s) + ".json"));
        args.push_back(d / ("l" + std::to_string(s) + ".json"));
    }
    CHECK(run(args) == 0);
    const ShapeModel model = ShapeModel::from_json(slurp(d / "model.json"));
    CHECK(model.n_modes() == 11);

    CHECK(run({"shape", "apply", d / "model.json", "--landmarks", d / "l3.json", "-o", d / "b.json"}) == 0);
    CHECK(run({"shape", "apply", d / "model.json", "--params", d / "b.json", "-o", d / "x.json"}) == 0);
    const LandmarkSet back = parse_landmarks(d / "x.json");
    const LandmarkSet orig = parse_landmarks(d / "l3.json");
    for (int id = 1; id <= 16; ++id) CHECK(norm(back.at(id) - orig.at(id)) < 1e-9);

    CHECK(run({"shape", "iterate", d / "model.json", "--target", d / "l5.json", "--predictor", "oracle", "--steps",
               "3"}) == 0);
    CHECK(run({"shape", "iterate", d / "model.json", "--target", d / "l5.json", "--predictor", "psychic"}) == 2);
    CHECK(run({"shape", "sample", "--landmarks", d / "l0.json", "--id", "10", "--radius", "3", "--count", "50",
               "--seed", "1", "-o", d / "patches.csv"}) == 0);
    CHECK(run({"shape", "fit", d / "m2.json", d / "l0.json", "--modes", "3"}) == 2);
}
