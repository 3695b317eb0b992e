// Command-line front end: analyze one event file prefix by prefix, or run
// decision-time batches (optionally generating a labelled synthetic dataset
// first) with tier counts and tuning sweeps.
//
// Exit codes: 0 success, 1 validation or usage failure, 2 numerical failure.
// All outputs are computed before any file is written.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecra/analysis.hpp"
#include "ecra/cdm_io.hpp"
#include "ecra/report.hpp"
#include "ecra/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CliConfig {
    std::string input;
    std::string format = "native-csv";
    std::string column_map;
    std::string out_dir = ".";
    std::string config_file;
    std::string pl0 = "auto";
    ecra::AnalysisOptions opts;
    std::vector<double> decision_times = {3.0, 2.0, 1.0, 0.0};
    std::vector<double> a0_grid;
    bool export_pboxes = false;

    // batch extras
    int generate_events = 0;
    bool tune = false;
    std::string labels;
};

void apply_pl0(CliConfig& cfg) {
    if (cfg.pl0 == "auto") {
        cfg.opts.thresholds.pl0 = 0.0;
        return;
    }
    try {
        std::size_t pos = 0;
        cfg.opts.thresholds.pl0 = std::stod(cfg.pl0, &pos);
        if (pos != cfg.pl0.size()) throw std::invalid_argument(cfg.pl0);
    } catch (const std::exception&) {
        throw ecra::ValidationError("--pl0 expects 'auto' or a number, got '" +
                                    cfg.pl0 + "'");
    }
    if (!(cfg.opts.thresholds.pl0 > 0.0) || cfg.opts.thresholds.pl0 > 1.0)
        throw ecra::ValidationError("--pl0 value must be in (0, 1]");
}

// Flat key=value configuration file with dotted sections.  Unknown keys are
// rejected; command-line flags win over file values.
void apply_config_file(CliConfig& cfg, const CLI::App& cmd) {
    std::ifstream in(cfg.config_file);
    if (!in)
        throw ecra::ValidationError("cannot open config file: " + cfg.config_file);

    auto flag_given = [&](const std::string& name) {
        const CLI::Option* o = cmd.get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    auto num = [](const std::string& key, const std::string& val) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
            return v;
        } catch (const std::exception&) {
            throw ecra::ValidationError("config key '" + key +
                                        "' has a bad numeric value '" + val + "'");
        }
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = line;
        if (auto h = t.find('#'); h != std::string::npos) t = t.substr(0, h);
        const auto ltrim = t.find_first_not_of(" \t\r\n");
        if (ltrim == std::string::npos) continue;
        const auto rtrim = t.find_last_not_of(" \t\r\n");
        t = t.substr(ltrim, rtrim - ltrim + 1);
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ecra::ParseError("config line is not key=value", line_no);
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        const std::string key = strip(t.substr(0, eq));
        const std::string val = strip(t.substr(eq + 1));

        auto& th = cfg.opts.thresholds;
        if (key == "thresholds.t1") {
            if (!flag_given("--t1")) th.t1_days = num(key, val);
        } else if (key == "thresholds.t2") {
            if (!flag_given("--t2")) th.t2_days = num(key, val);
        } else if (key == "thresholds.poc0") {
            if (!flag_given("--poc0")) th.poc0 = num(key, val);
        } else if (key == "thresholds.pl0") {
            if (!flag_given("--pl0")) cfg.pl0 = val;
        } else if (key == "thresholds.a0") {
            if (!flag_given("--a0")) th.a0_normalized = num(key, val);
        } else if (key == "thresholds.poc_floor") {
            if (!flag_given("--poc-floor")) th.poc_floor = num(key, val);
        } else if (key == "pipeline.n_cuts") {
            if (!flag_given("--n-cuts")) cfg.opts.n_cuts = static_cast<int>(num(key, val));
        } else if (key == "pipeline.delta") {
            if (!flag_given("--delta")) cfg.opts.delta = num(key, val);
        } else if (key == "pipeline.rel_tol") {
            if (!flag_given("--rel-tol")) cfg.opts.rel_tol = num(key, val);
        } else if (key == "pipeline.jobs") {
            if (!flag_given("--jobs")) cfg.opts.jobs = static_cast<int>(num(key, val));
        } else if (key == "pipeline.seed") {
            if (!flag_given("--seed"))
                cfg.opts.seed = static_cast<std::uint64_t>(num(key, val));
        } else if (key == "spoc.kp_lo") {
            cfg.opts.cnes.spoc.kp.lo = num(key, val);
        } else if (key == "spoc.kp_hi") {
            cfg.opts.cnes.spoc.kp.hi = num(key, val);
        } else if (key == "spoc.ks_lo") {
            cfg.opts.cnes.spoc.ks.lo = num(key, val);
        } else if (key == "spoc.ks_hi") {
            cfg.opts.cnes.spoc.ks.hi = num(key, val);
        } else if (key == "spoc.grid_resolution") {
            cfg.opts.cnes.spoc.grid_resolution = static_cast<int>(num(key, val));
        } else if (key == "cnes.red_threshold") {
            cfg.opts.cnes.red_threshold = num(key, val);
        } else if (key == "cnes.orange_threshold") {
            cfg.opts.cnes.orange_threshold = num(key, val);
        } else if (key == "cnes.caution_miss_m") {
            cfg.opts.cnes.caution_miss_m = num(key, val);
        } else if (key == "cnes.caution_radial_m") {
            cfg.opts.cnes.caution_radial_m = num(key, val);
        } else if (key == "input.path") {
            if (!flag_given("--input")) cfg.input = val;
        } else if (key == "input.format") {
            if (!flag_given("--format")) cfg.format = val;
        } else if (key == "input.column_map") {
            if (!flag_given("--column-map")) cfg.column_map = val;
        } else if (key == "output.dir") {
            if (!flag_given("--out")) cfg.out_dir = val;
        } else {
            throw ecra::ValidationError("unknown config key '" + key + "' (line " +
                                        std::to_string(line_no) + ")");
        }
    }
}

void add_common_flags(CLI::App* cmd, CliConfig& cfg) {
    cmd->add_option("--input", cfg.input, "Event file to read");
    cmd->add_option("--format", cfg.format,
                    "Input format: native-csv, native-json or kelvins-csv");
    cmd->add_option("--column-map", cfg.column_map,
                    "key=value file mapping canonical fields to source columns");
    cmd->add_option("--out", cfg.out_dir, "Output directory");
    cmd->add_option("--config", cfg.config_file,
                    "key=value file with dotted keys; flags override it");
    cmd->add_option("--n-cuts", cfg.opts.n_cuts, "Alpha cuts per variable (1-15)");
    cmd->add_option("--delta", cfg.opts.delta, "DKW confidence parameter in (0,1)");
    cmd->add_option("--poc0", cfg.opts.thresholds.poc0, "PoC decision threshold");
    cmd->add_option("--t1", cfg.opts.thresholds.t1_days, "Reaction horizon in days");
    cmd->add_option("--t2", cfg.opts.thresholds.t2_days, "Screening horizon in days");
    cmd->add_option("--a0", cfg.opts.thresholds.a0_normalized,
                    "Normalized area threshold in [0,1]");
    cmd->add_option("--pl0", cfg.pl0, "Plausibility threshold: 'auto' or a value");
    cmd->add_option("--poc-floor", cfg.opts.thresholds.poc_floor,
                    "Lower end of the log-threshold range");
    cmd->add_option("--rel-tol", cfg.opts.rel_tol, "PoC quadrature tolerance");
    cmd->add_option("--seed", cfg.opts.seed, "Seed for all randomized components");
    cmd->add_option("--jobs", cfg.opts.jobs, "Worker threads; 0 = hardware");
}

std::vector<ecra::EventSequence> load_events(const CliConfig& cfg) {
    if (cfg.input.empty())
        throw ecra::ValidationError("no input: pass --input (or --generate for batch)");
    ecra::ColumnMap map;
    if (!cfg.column_map.empty()) map = ecra::parse_column_map_file(cfg.column_map);
    const auto events = ecra::parse_event_file(
        cfg.input, ecra::parse_format(cfg.format), map,
        [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; });
    if (events.empty()) throw ecra::ValidationError("input contains no events");
    return events;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ecra::ValidationError("cannot write " + p.string());
    out << content;
    if (!out) throw ecra::ValidationError("short write on " + p.string());
}

int run_analyze(CliConfig& cfg) {
    apply_pl0(cfg);
    ecra::validate(cfg.opts);
    const auto events = load_events(cfg);

    // Everything is rendered to strings first, then written.
    std::vector<std::pair<fs::path, std::string>> outputs;
    const fs::path dir(cfg.out_dir);
    for (const auto& seq : events) {
        const ecra::EventAnalysis ea = ecra::analyze_event(seq, cfg.opts);
        std::ostringstream report;
        report << ecra::event_report_json(ea, cfg.opts, cfg.export_pboxes).dump(2)
               << '\n';
        std::ostringstream curve;
        ecra::write_curve_csv(curve, ea.prefixes.back().curve);
        std::ostringstream timeline;
        ecra::write_timeline_csv(timeline, ea);
        outputs.emplace_back(dir / (seq.event_id + "_report.json"), report.str());
        outputs.emplace_back(dir / (seq.event_id + "_curve.csv"), curve.str());
        outputs.emplace_back(dir / (seq.event_id + "_timeline.csv"), timeline.str());
    }

    fs::create_directories(dir);
    for (const auto& [path, content] : outputs) write_file(path, content);
    for (const auto& [path, content] : outputs) std::cout << path.string() << "\n";
    return 0;
}

int run_batch_cmd(CliConfig& cfg) {
    apply_pl0(cfg);
    ecra::validate(cfg.opts);

    std::vector<ecra::SyntheticEvent> labelled;
    std::vector<ecra::EventSequence> events;
    std::string dataset_csv, labels_csv;
    if (cfg.generate_events > 0) {
        if (!cfg.input.empty())
            throw ecra::ValidationError("--generate and --input are exclusive");
        ecra::SyntheticSpec spec;
        spec.n_events = cfg.generate_events;
        spec.seed = cfg.opts.seed;
        spec.label_poc0 = cfg.opts.thresholds.poc0;
        labelled = ecra::generate_synthetic(spec);
        events = ecra::strip_labels(labelled);
        std::ostringstream ds, lb;
        ecra::write_native_csv(ds, events);
        ecra::write_labels_csv(lb, labelled);
        dataset_csv = ds.str();
        labels_csv = lb.str();
    } else {
        events = load_events(cfg);
        if (cfg.tune) {
            if (cfg.labels.empty())
                throw ecra::ValidationError("--tune needs --labels or --generate");
            const auto labels = ecra::parse_labels_csv(cfg.labels);
            for (const auto& seq : events) {
                const auto it = labels.find(seq.event_id);
                if (it == labels.end())
                    throw ecra::ValidationError("no label for event " + seq.event_id);
                ecra::SyntheticEvent ev;
                ev.seq = seq;
                ev.true_poc = it->second.true_poc;
                ev.positive = it->second.positive;
                labelled.push_back(std::move(ev));
            }
        }
    }

    const ecra::BatchReport rep =
        ecra::run_batch(events, cfg.opts, cfg.decision_times, cfg.a0_grid);
    std::ostringstream batch_csv, batch_json;
    ecra::write_batch_csv(batch_csv, rep);
    batch_json << ecra::batch_report_json(rep, cfg.opts).dump(2) << '\n';

    std::string tune_csv;
    if (cfg.tune) {
        std::vector<double> grid = cfg.a0_grid;
        if (grid.empty()) grid = {cfg.opts.thresholds.a0_normalized};
        const ecra::TuneTable table = ecra::tune_sweep(labelled, cfg.opts, grid);
        std::ostringstream ts;
        ecra::write_tune_csv(ts, table);
        tune_csv = ts.str();
    }

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    auto emit = [&](const fs::path& p, const std::string& s) {
        write_file(p, s);
        written.push_back(p);
    };
    if (!dataset_csv.empty()) emit(dir / "synthetic_events.csv", dataset_csv);
    if (!labels_csv.empty()) emit(dir / "synthetic_labels.csv", labels_csv);
    emit(dir / "batch_report.csv", batch_csv.str());
    emit(dir / "batch_report.json", batch_json.str());
    if (cfg.tune) emit(dir / "tune.csv", tune_csv);
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Epistemic conjunction risk assessment over CDM sequences"};
    app.require_subcommand(1);

    CliConfig acfg, bcfg;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Rolling prefix-by-prefix analysis of each event in a file");
    add_common_flags(analyze, acfg);
    analyze->add_flag("--export-pboxes", acfg.export_pboxes,
                      "Embed full mixture parameters in the report");

    CLI::App* batch = app.add_subcommand(
        "batch", "Classify events at fixed decision times and aggregate counts");
    add_common_flags(batch, bcfg);
    batch->add_option("--decision-times", bcfg.decision_times,
                      "Decision times in days, descending")
        ->delimiter(',');
    batch->add_option("--a0-grid", bcfg.a0_grid,
                      "Area thresholds for tier counts")
        ->delimiter(',');
    batch->add_option("--generate", bcfg.generate_events,
                      "Generate a labelled synthetic dataset of this size");
    batch->add_flag("--tune", bcfg.tune, "Write a confusion table over the a0 grid");
    batch->add_option("--labels", bcfg.labels,
                      "Ground-truth labels CSV for --tune on external data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (analyze->parsed()) {
            if (!acfg.config_file.empty()) apply_config_file(acfg, *analyze);
            return run_analyze(acfg);
        }
        if (!bcfg.config_file.empty()) apply_config_file(bcfg, *batch);
        return run_batch_cmd(bcfg);
    } catch (const ecra::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ecra::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
