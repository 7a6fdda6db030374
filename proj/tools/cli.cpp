#include "panoflow/cli.hpp"

#include "panoflow/backend.hpp"
#include "panoflow/cfe.hpp"
#include "panoflow/cubemap.hpp"
#include "panoflow/distortion.hpp"
#include "panoflow/error.hpp"
#include "panoflow/io.hpp"
#include "panoflow/metrics.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/spherical.hpp"
#include "panoflow/synthetic.hpp"
#include "panoflow/visualize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace panoflow::cli {

namespace {

constexpr const char* frame1_name = "frame_0001.png";
constexpr const char* frame2_name = "frame_0002.png";
constexpr const char* flow_name = "flow_0001.flo";

struct Globals {
    std::string config;
    int threads = 0;
    bool json = false;
};

struct DistortOptions {
    std::vector<std::string> frames;
    std::vector<std::string> flows;
    std::string out_dir;
    std::string params_file;
    double k2 = default_radial_coefficients.k2;
    double k4 = default_radial_coefficients.k4;
    double k6 = default_radial_coefficients.k6;
    double center_x = 0.0;
    double center_y = 0.0;
    std::string variant = "standard-radial";
    std::uint64_t seed = 0;
    double max_scale = 1.5;
    float fill = 0.0f;
};

struct EstimateOptions {
    std::string frame1, frame2, out;
    std::string dataset, out_dir;
    std::string backend = "builtin";
    std::string flow_dir;
    std::string pair_id;
    std::string cfe = "default";
    BuiltinParams builtin;
};

struct EvaluateOptions {
    std::string pred, gt, out;
    bool per_condition = false;
};

struct Outputs {
    std::ostream& out;
    std::ostream& err;
    bool json;
};

// --config: a flat JSON object keyed by long option names of the active
// subcommand or the global options. Values fill options that were not given
// on the command line.
void apply_config(CLI::App& app, CLI::App& sub, const std::string& path)
{
    std::ifstream in(path);
    if(!in) throw IoError("cannot open config file '" + path + "'");
    json j;
    try
    {
        j = json::parse(in);
    }
    catch(const json::parse_error& e)
    {
        throw FormatError("config file '" + path + "': " + e.what());
    }
    if(!j.is_object()) throw FormatError("config file '" + path + "' must hold a JSON object");

    for(const auto& [key, value] : j.items())
    {
        CLI::Option* opt = nullptr;
        if(key != "config" && key != "help" && key != "help-all")
        {
            opt = sub.get_option_no_throw("--" + key);
            if(!opt) opt = app.get_option_no_throw("--" + key);
        }
        if(!opt) throw UsageError("unknown config key '" + key + "' for '" + sub.get_name() + "'");
        if(opt->count() > 0) continue;

        std::vector<std::string> values;
        const auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if(value.is_array())
            for(const auto& v : value) values.push_back(text(v));
        else if(value.is_boolean())
        {
            if(!value.get<bool>()) continue;
            values.push_back("true");
        }
        else
            values.push_back(text(value));
        try
        {
            opt->add_result(values);
            opt->run_callback();
        }
        catch(const CLI::Error& e)
        {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

void emit(const Outputs& o, const json& record, const std::string& text)
{
    if(o.json)
        o.out << record.dump() << '\n';
    else
        o.out << text;
}

void ensure_directory(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if(ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// distort

DistortionParams fixed_distortion(const DistortOptions& o, const CLI::App& sub, int width, int height)
{
    DistortionParams params = centered_params(width, height);
    if(!o.params_file.empty())
    {
        std::ifstream in(o.params_file);
        if(!in) throw IoError("cannot open distortion parameters '" + o.params_file + "'");
        const json j = json::parse(in);
        params = distortion_params_from_json(j);
        if(!j.contains("center")) params.center = centered_params(width, height).center;
    }
    if(sub.count("--k2")) params.coefficients.k2 = o.k2;
    if(sub.count("--k4")) params.coefficients.k4 = o.k4;
    if(sub.count("--k6")) params.coefficients.k6 = o.k6;
    if(sub.count("--center-x")) params.center.x = o.center_x;
    if(sub.count("--center-y")) params.center.y = o.center_y;
    if(sub.count("--variant")) params.variant = parse_distortion_variant(o.variant);
    return params;
}

int cmd_distort(const DistortOptions& o, const CLI::App& sub, const Outputs& out)
{
    if(o.frames.empty() && o.flows.empty()) throw UsageError("distort: nothing to do (give --frames and/or --flows)");
    if(!o.frames.empty() && o.frames.size() != 2 * o.flows.size())
        throw ContractError("distort: " + std::to_string(o.frames.size()) + " frames need "
                            + std::to_string(o.frames.size() / 2 + o.frames.size() % 2)
                            + " flows (one per frame pair), got " + std::to_string(o.flows.size()));
    const bool sampled = sub.count("--seed") > 0;
    if(sampled && (!o.params_file.empty() || sub.count("--k2") || sub.count("--k4") || sub.count("--k6")))
        throw UsageError("distort: --seed samples the coefficients; do not combine it with --params or --k2/--k4/--k6");

    struct Pending {
        fs::path path;
        std::vector<unsigned char> bytes;
        bool png = false;
        Image image;
    };
    std::vector<Pending> pending;
    std::set<fs::path> targets;
    const auto reserve = [&](const std::string& input) {
        fs::path target = fs::path(o.out_dir) / fs::path(input).filename();
        if(!targets.insert(target).second) throw ContractError("distort: two inputs map to '" + target.string() + "'");
        return target;
    };

    DistortionSampler sampler(o.seed, o.max_scale);
    json records = json::array();
    for(std::size_t p = 0; p < o.flows.size(); ++p)
    {
        const FlowField flow = read_flo(o.flows[p]);
        std::vector<Image> frames;
        if(!o.frames.empty())
            for(int k = 0; k < 2; ++k)
            {
                frames.push_back(read_png(o.frames[2 * p + std::size_t(k)]));
                if(frames.back().width() != flow.width() || frames.back().height() != flow.height())
                    throw ContractError("distort: frame '" + o.frames[2 * p + std::size_t(k)] + "' is "
                                        + std::to_string(frames.back().width()) + "x"
                                        + std::to_string(frames.back().height()) + " but flow '" + o.flows[p]
                                        + "' is " + std::to_string(flow.width()) + "x" + std::to_string(flow.height()));
            }

        DistortionParams params = sampled ? sampler.sample(flow.width(), flow.height())
                                          : fixed_distortion(o, sub, flow.width(), flow.height());
        if(sampled && sub.count("--variant")) params.variant = parse_distortion_variant(o.variant);
        const DistortionGrid grid(DistortionModel(params, flow.width(), flow.height()));

        json record = {{"flow", o.flows[p]}, {"params", to_json(params)}};
        if(sampled) record["scale"] = sampler.last_scale();
        pending.push_back({reserve(o.flows[p]), encode_flo(distort_flow(flow, grid)), false, {}});
        for(std::size_t k = 0; k < frames.size(); ++k)
        {
            pending.push_back({reserve(o.frames[2 * p + k]), {}, true, distort_image(frames[k], grid, o.fill)});
            record["frames"].push_back(o.frames[2 * p + k]);
        }
        records.push_back(record);
    }

    ensure_directory(o.out_dir);
    json written = json::array();
    for(const auto& item : pending)
    {
        if(item.png)
            write_png(item.image, item.path);
        else
            write_file_atomic(item.path, item.bytes);
        written.push_back(item.path.string());
    }
    const fs::path record_path = fs::path(o.out_dir) / "distortion.json";
    write_text_atomic(record_path, json{{"pairs", records}}.dump(2) + "\n");

    emit(out, {{"command", "distort"}, {"outputs", written}, {"record", record_path.string()}, {"pairs", records}},
         "wrote " + std::to_string(written.size()) + " files and " + record_path.string() + "\n");
    return 0;
}

// convert

int cmd_convert(const std::string& in, const std::string& target, const Outputs& out)
{
    const FlowField flow = convert_to_360(read_flo(in));
    write_flo(flow, target);
    emit(out, {{"command", "convert"}, {"output", target}}, "wrote " + target + "\n");
    return 0;
}

// estimate

std::unique_ptr<EstimatorBackend> make_backend(const EstimateOptions& o)
{
    if(o.backend == "file")
    {
        if(o.flow_dir.empty()) throw UsageError("estimate: --backend file needs --flow-dir");
        return std::make_unique<FileBackend>(o.flow_dir);
    }
    return std::make_unique<BuiltinBackend>(o.builtin);
}

double estimate_pair(const EstimatorBackend& backend, CfeMode mode, const fs::path& f1, const fs::path& f2,
                     const std::string& pair_id, const fs::path& target)
{
    const Image first = read_png(f1);
    const Image second = read_png(f2);
    const auto t0 = std::chrono::steady_clock::now();
    const FlowField flow = cyclic_estimate(backend, first, second, mode, {pair_id});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_flo(flow, target);
    return seconds;
}

// Directories under root holding both frames, as sorted relative paths.
std::vector<fs::path> find_pairs(const fs::path& root)
{
    if(!fs::is_directory(root)) throw IoError("'" + root.string() + "' is not a directory");
    std::vector<fs::path> pairs;
    for(const auto& entry : fs::recursive_directory_iterator(root))
        if(entry.is_directory() && fs::exists(entry.path() / frame1_name) && fs::exists(entry.path() / frame2_name))
            pairs.push_back(fs::relative(entry.path(), root));
    if(fs::exists(root / frame1_name) && fs::exists(root / frame2_name)) pairs.push_back(".");
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::string seconds_text(double s)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << s;
    return os.str();
}

int cmd_estimate(const EstimateOptions& o, const Outputs& out)
{
    const CfeMode mode = parse_cfe_mode(o.cfe);
    const auto backend = make_backend(o);
    if(needs_feature_split(mode) && !backend->capabilities().has_encode_decode_split)
        throw UsageError("estimate: --cfe " + o.cfe + " needs a backend with an encode/decode split; the " + o.backend
                         + " backend supports only naive and double");

    const bool batch = !o.dataset.empty();
    if(batch == (!o.frame1.empty() || !o.frame2.empty() || !o.out.empty()))
        throw UsageError("estimate: give either FRAME1 FRAME2 OUT or --dataset DIR --out-dir DIR");
    if(batch)
    {
        if(o.out_dir.empty()) throw UsageError("estimate: --dataset needs --out-dir");
        const auto pairs = find_pairs(o.dataset);
        if(pairs.empty()) throw ContractError("estimate: no frame pairs under '" + o.dataset + "'");
        json items = json::array();
        std::ostringstream text;
        double total = 0.0;
        for(const auto& rel : pairs)
        {
            const fs::path dir = fs::path(o.dataset) / rel;
            const fs::path target_dir = fs::path(o.out_dir) / rel;
            ensure_directory(target_dir);
            const std::string id = rel == "." ? "pair" : rel.generic_string();
            const double s = estimate_pair(*backend, mode, dir / frame1_name, dir / frame2_name, id, target_dir / flow_name);
            total += s;
            items.push_back({{"pair", id}, {"output", (target_dir / flow_name).string()}, {"estimate_seconds", s}});
            text << id << "  estimate_seconds " << seconds_text(s) << '\n';
        }
        text << "pairs " << pairs.size() << "  total_estimate_seconds " << seconds_text(total) << '\n';
        emit(out,
             {{"command", "estimate"}, {"backend", o.backend}, {"cfe", o.cfe}, {"pairs", items},
              {"total_estimate_seconds", total}},
             text.str());
        return 0;
    }

    if(o.frame1.empty() || o.frame2.empty() || o.out.empty()) throw UsageError("estimate: needs FRAME1 FRAME2 OUT");
    const std::string id = o.pair_id.empty() ? fs::path(o.frame1).stem().string() : o.pair_id;
    const double s = estimate_pair(*backend, mode, o.frame1, o.frame2, id, o.out);
    emit(out,
         {{"command", "estimate"}, {"backend", o.backend}, {"cfe", o.cfe}, {"output", o.out}, {"estimate_seconds", s}},
         "wrote " + o.out + "\nestimate_seconds " + seconds_text(s) + "\n");
    return 0;
}

// evaluate

std::vector<fs::path> find_flows(const fs::path& root)
{
    if(!fs::is_directory(root)) throw IoError("'" + root.string() + "' is not a directory");
    std::vector<fs::path> flows;
    for(const auto& entry : fs::recursive_directory_iterator(root))
        if(entry.is_regular_file() && entry.path().extension() == ".flo") flows.push_back(fs::relative(entry.path(), root));
    std::sort(flows.begin(), flows.end());
    return flows;
}

int cmd_evaluate(const EvaluateOptions& o, const Outputs& out)
{
    const auto gt_files = find_flows(o.gt);
    const auto pred_files = find_flows(o.pred);
    const std::set<fs::path> pred_set(pred_files.begin(), pred_files.end());
    const std::set<fs::path> gt_set(gt_files.begin(), gt_files.end());

    EvalReport report;
    json unmatched = json::array();
    std::size_t matched = 0;
    for(const auto& rel : gt_files)
    {
        if(!pred_set.count(rel))
        {
            unmatched.push_back({{"gt", rel.generic_string()}});
            continue;
        }
        const FlowField gt = convert_to_360(read_flo(fs::path(o.gt) / rel));
        const FlowField pred = convert_to_360(read_flo(fs::path(o.pred) / rel));
        const std::string condition = std::distance(rel.begin(), rel.end()) > 1 ? rel.begin()->string() : "unlabeled";
        report.add(condition, epe_accumulate(pred, gt));
        ++matched;
    }
    for(const auto& rel : pred_files)
        if(!gt_set.count(rel)) unmatched.push_back({{"pred", rel.generic_string()}});

    if(!unmatched.empty() && !out.json)
        for(const auto& u : unmatched)
            out.err << "warning: unmatched " << u.begin().key() << " flow '" << u.begin().value().get<std::string>()
                    << "' excluded\n";
    if(matched == 0) throw ContractError("evaluate: no prediction matches a ground-truth flow");

    json record = report.to_json(o.per_condition);
    record["command"] = "evaluate";
    record["matched"] = matched;
    record["unmatched"] = unmatched;
    if(!o.out.empty()) write_text_atomic(o.out, record.dump(2) + "\n");
    emit(out, record, report.to_text(o.per_condition));
    return 0;
}

// visualize

int cmd_visualize(const std::string& in, const std::string& target, double threshold, const Outputs& out)
{
    const FlowField flow = read_flo(in);
    if(threshold <= 0.0)
    {
        threshold = 0.0;
        for(int y = 0; y < flow.height(); ++y)
            for(int x = 0; x < flow.width(); ++x)
                if(flow.valid(x, y)) threshold = std::max(threshold, std::hypot(double(flow.u(x, y)), double(flow.v(x, y))));
        if(threshold == 0.0) threshold = 1.0;
    }
    write_png(visualize_flow(flow, threshold), target);
    emit(out, {{"command", "visualize"}, {"output", target}, {"threshold", threshold}}, "wrote " + target + "\n");
    return 0;
}

// cube2erp

int cmd_cube2erp(const std::map<std::string, std::string>& face_paths, const std::string& faces_dir, int width,
                 const std::string& target, const Outputs& out)
{
    CubeFaceSet faces;
    for(CubeFace face : all_cube_faces)
    {
        const std::string name(to_string(face));
        fs::path path;
        if(auto it = face_paths.find(name); it != face_paths.end() && !it->second.empty())
            path = it->second;
        else if(!faces_dir.empty())
            path = fs::path(faces_dir) / (name + ".png");
        else
            throw UsageError("cube2erp: no image for face '" + name + "' (give --" + name + " or --faces-dir)");
        faces[face] = read_png(path);
    }
    faces.validate();
    write_png(cubemap_to_equirect(faces, width), target);
    emit(out, {{"command", "cube2erp"}, {"output", target}, {"width", width}}, "wrote " + target + "\n");
    return 0;
}

// synth

int cmd_synth(const std::string& manifest_path, std::string root, const Outputs& out)
{
    std::ifstream in(manifest_path);
    if(!in) throw IoError("cannot open manifest '" + manifest_path + "'");
    json j;
    try
    {
        j = json::parse(in);
    }
    catch(const json::parse_error& e)
    {
        throw FormatError("manifest '" + manifest_path + "': " + e.what());
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    const DatasetManifest manifest = parse_manifest(j, base);
    if(root.empty())
    {
        if(!j.contains("root")) throw UsageError("synth: no output root (give --root or a manifest 'root')");
        const fs::path r = j.at("root").get<std::string>();
        root = (r.is_absolute() ? r : base / r).string();
    }
    const auto dirs = gen_dataset(manifest, root);
    json listed = json::array();
    for(const auto& d : dirs) listed.push_back(d.string());
    emit(out, {{"command", "synth"}, {"root", root}, {"sequences", listed}},
         "wrote " + std::to_string(dirs.size()) + " sequences under " + root + "\n");
    return 0;
}

int exit_for(const std::exception& e, std::ostream& err, int code)
{
    err << "error: " << e.what() << '\n';
    return code;
}

}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Panoramic optical flow: distortion augmentation, 360 flow, cyclic estimation, evaluation"};
    app.name("panoflow");
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Globals g;
    app.add_option("--config", g.config, "JSON file of option values (long names without dashes); flags override it");
    app.add_option("--threads", g.threads, "Worker thread cap (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--json", g.json, "Machine-readable output: one JSON object on stdout");

    // distort
    DistortOptions dopt;
    auto* distort = app.add_subcommand("distort", "Apply radial distortion to frame pairs and their flows");
    distort->add_option("--frames", dopt.frames, "PNG frames, two per flow, in pair order");
    distort->add_option("--flows", dopt.flows, ".flo flows, one per frame pair");
    distort->add_option("--out-dir", dopt.out_dir, "Output directory")->required();
    distort->add_option("--params", dopt.params_file, "JSON sidecar {center: [x, y], k2, k4, k6, variant}");
    distort->add_option("--k2", dopt.k2, "Quadratic coefficient")->capture_default_str();
    distort->add_option("--k4", dopt.k4, "Quartic coefficient")->capture_default_str();
    distort->add_option("--k6", dopt.k6, "Sextic coefficient")->capture_default_str();
    distort->add_option("--center-x", dopt.center_x, "Distortion center column (default: image center)");
    distort->add_option("--center-y", dopt.center_y, "Distortion center row (default: image center)");
    distort->add_option("--variant", dopt.variant, "Model variant")
        ->check(CLI::IsMember({"standard-radial", "paper-literal"}))
        ->capture_default_str();
    distort->add_option("--seed", dopt.seed, "Sample one scaled coefficient set per pair from this seed");
    distort->add_option("--max-scale", dopt.max_scale, "Upper bound of the sampled coefficient scale")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    distort->add_option("--fill", dopt.fill, "Value for pixels sampled outside the image")->capture_default_str();

    // convert
    std::string convert_in, convert_out;
    auto* convert = app.add_subcommand("convert", "Convert a flow to the shortest-path 360 representation");
    convert->add_option("input", convert_in, "Input .flo")->required();
    convert->add_option("output", convert_out, "Output .flo")->required();

    // estimate
    EstimateOptions eopt;
    auto* estimate = app.add_subcommand("estimate", "Estimate 360 flow between two panoramas");
    estimate->add_option("frame1", eopt.frame1, "First frame (PNG)");
    estimate->add_option("frame2", eopt.frame2, "Second frame (PNG)");
    estimate->add_option("output", eopt.out, "Output .flo");
    estimate->add_option("--dataset", eopt.dataset, "Estimate every <dir>/frame_0001.png, frame_0002.png pair below DIR");
    estimate->add_option("--out-dir", eopt.out_dir, "Batch output root; mirrors the dataset layout");
    estimate->add_option("--backend", eopt.backend, "Estimator backend")
        ->check(CLI::IsMember({"builtin", "file"}))
        ->capture_default_str();
    estimate->add_option("--flow-dir", eopt.flow_dir, "File backend: directory of <pair-id>.flo / <pair-id>_swapped.flo");
    estimate->add_option("--pair-id", eopt.pair_id, "File backend key (default: stem of FRAME1)");
    estimate->add_option("--cfe", eopt.cfe, "Cyclic estimation mode")
        ->check(CLI::IsMember({"naive", "default", "double", "half-zero", "half-same"}))
        ->capture_default_str();
    estimate->add_option("--levels", eopt.builtin.levels, "Builtin: pyramid levels")->capture_default_str();
    estimate->add_option("--radius", eopt.builtin.radius, "Builtin: search radius per level")->capture_default_str();
    estimate->add_option("--coarse-radius", eopt.builtin.coarse_radius, "Builtin: search radius at the coarsest level")
        ->capture_default_str();
    estimate->add_option("--iterations", eopt.builtin.iterations, "Builtin: matching passes per level")
        ->capture_default_str();
    estimate->add_option("--aggregation-radius", eopt.builtin.aggregation_radius, "Builtin: cost window half-size")
        ->capture_default_str();
    estimate->add_option("--max-u", eopt.builtin.max_horizontal_displacement,
                         "Builtin: |u| cap in pixels (0 = none)")
        ->capture_default_str();
    estimate->add_option("--confidence-bits", eopt.builtin.confidence_bits,
                         "Builtin: mean census cost at or below which a match is confident")
        ->capture_default_str();
    estimate->add_flag("--circular", eopt.builtin.circular, "Builtin: circular horizontal padding in the encoder");

    // evaluate
    EvaluateOptions vopt;
    auto* evaluate = app.add_subcommand("evaluate", "EPE of predicted flows against ground truth");
    evaluate->add_option("pred", vopt.pred, "Directory of predicted .flo files")->required();
    evaluate->add_option("gt", vopt.gt, "Ground-truth directory or dataset root")->required();
    evaluate->add_flag("--per-condition", vopt.per_condition, "One report column per condition (top-level directory)");
    evaluate->add_option("--out", vopt.out, "Also write the JSON report here");

    // visualize
    std::string vis_in, vis_out;
    double vis_threshold = 0.0;
    auto* visualize = app.add_subcommand("visualize", "Color-code a flow field");
    visualize->add_option("input", vis_in, "Input .flo")->required();
    visualize->add_option("output", vis_out, "Output PNG")->required();
    visualize->add_option("--threshold", vis_threshold, "Saturation threshold in pixels (0 = largest valid magnitude)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    // cube2erp
    std::map<std::string, std::string> face_paths;
    std::string faces_dir, cube_out;
    int cube_width = 0;
    auto* cube2erp = app.add_subcommand("cube2erp", "Stitch six cube faces into an equirectangular panorama");
    for(CubeFace face : all_cube_faces)
    {
        const std::string name(to_string(face));
        cube2erp->add_option("--" + name, face_paths[name], "Face image (PNG)");
    }
    cube2erp->add_option("--faces-dir", faces_dir, "Directory with <face>.png for faces not given individually");
    cube2erp->add_option("--width", cube_width, "Panorama width (even)")->required()->check(CLI::PositiveNumber);
    cube2erp->add_option("output", cube_out, "Output PNG")->required();

    // synth
    std::string manifest, synth_root;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a JSON manifest");
    synth->add_option("manifest", manifest, "Manifest JSON")->required();
    synth->add_option("--root", synth_root, "Output root (overrides the manifest's root)");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch(const CLI::CallForHelp&)
    {
        out << app.help();
        return 0;
    }
    catch(const CLI::CallForAllHelp&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch(const CLI::ParseError& e)
    {
        return exit_for(e, err, 2);
    }

    try
    {
        CLI::App* sub = app.get_subcommands().front();
        if(!g.config.empty()) apply_config(app, *sub, g.config);
        set_thread_count(g.threads);
        const Outputs o{out, err, g.json};

        if(sub == distort) return cmd_distort(dopt, *distort, o);
        if(sub == convert) return cmd_convert(convert_in, convert_out, o);
        if(sub == estimate) return cmd_estimate(eopt, o);
        if(sub == evaluate) return cmd_evaluate(vopt, o);
        if(sub == visualize) return cmd_visualize(vis_in, vis_out, vis_threshold, o);
        if(sub == cube2erp) return cmd_cube2erp(face_paths, faces_dir, cube_width, cube_out, o);
        if(sub == synth) return cmd_synth(manifest, synth_root, o);
        throw UsageError("unknown subcommand");
    }
    catch(const Error& e)
    {
        return exit_for(e, err, exit_code(e.kind()));
    }
    catch(const json::exception& e)
    {
        return exit_for(e, err, exit_code(ErrorKind::Format));
    }
    catch(const fs::filesystem_error& e)
    {
        return exit_for(e, err, exit_code(ErrorKind::Io));
    }
    catch(const std::exception& e)
    {
        return exit_for(e, err, 1);
    }
}

}
