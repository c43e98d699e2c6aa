#include "safestir/harness/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "safestir/arb/arbiter.hpp"
#include "safestir/errors.hpp"
#include "safestir/rl/ddpg.hpp"

namespace safestir::harness {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw MissingArtifactError("cannot write: " + path);
        os << content;
    }
    fs::rename(tmp, path);
}

namespace {

std::uint64_t fnv(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hash_comment(const ExperimentConfig& config) {
    return "# config_hash=" + config_hash(config) + "\n";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct MeanStd {
    double mean = 0.0;
    double std_dev = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std_dev = std::sqrt(var / values.size());
    return out;
}

}  // namespace

skills::SkillSpec skill_spec_for(const std::string& skill_name,
                                 const ExperimentConfig& config) {
    if (skill_name == "stir") return skills::make_stir_skill({});
    if (skill_name == "compound") return skills::make_compound_skill({});
    if (skill_name == "slide" || skill_name == "overturn" || skill_name == "spill")
        return skills::make_prevention_skill(skill_name, {}, estimators(config));
    throw ConfigError("unknown skill: " + skill_name);
}

std::uint64_t train_seed(const ExperimentConfig& config, const std::string& skill_name) {
    return config.seed ^ fnv(skill_name);
}

rl::TrainConfig training_config_for(const std::string& skill_name,
                                    const ExperimentConfig& config) {
    rl::TrainConfig tc = config.train;
    tc.seed = train_seed(config, skill_name);
    if (skill_name == "slide") {
        // Recovering the bowl is a sparse-reward task: committed straight
        // pushes are the exploration primitive that finds it, the rare
        // successes deserve extra gradient steps and a longer run, and the
        // actor has to lag the critic or it locks onto one push direction
        // before the critic has separated the cases.
        tc.noise_dt = std::max(tc.noise_dt, 0.02);
        tc.updates_per_step = std::max(tc.updates_per_step, 2);
        tc.episodes = std::max(tc.episodes, (5 * config.train.episodes) / 2);
        tc.actor_weight_decay = std::max(tc.actor_weight_decay, 0.1);
    }
    return tc;
}

TrainOutcome cmd_train(const std::string& skill_name, const ExperimentConfig& config,
                       const std::string& out_root) {
    if (!known_skill(skill_name)) throw ConfigError("unknown skill: " + skill_name);
    fs::create_directories(out_root);

    skills::SkillSpec spec = skill_spec_for(skill_name, config);
    skills::SkillEnvironment env(config.sim, training_setup(skill_name), spec,
                                 estimators(config),
                                 train_seed(config, skill_name) ^ 0x5DEECE66DULL);
    rl::TrainConfig tc = training_config_for(skill_name, config);

    fs::path root(out_root);
    auto progress = [&](int episode, const nn::DenseNet& actor, double, bool is_best) {
        if (is_best) {
            nn::save_checkpoint(
                (root / (skill_name + "_" + std::to_string(episode) + ".ckpt")).string(),
                actor);
        }
    };
    rl::TrainingResult result = rl::run_training(env, tc, progress);

    TrainOutcome out;
    out.checkpoint = (root / (skill_name + "_best.ckpt")).string();
    out.curve_csv = (root / (skill_name + "_curve.csv")).string();
    out.best_eval = result.best_eval;
    out.best_episode = result.best_episode;
    nn::save_checkpoint(out.checkpoint, result.best_actor);

    std::ostringstream csv;
    csv << hash_comment(config) << rl::curve_csv_header() << '\n';
    for (const auto& row : result.curve) csv << rl::curve_csv_row(row) << '\n';
    write_file(out.curve_csv, csv.str());
    return out;
}

skills::SkillLibrary build_library(const ExperimentConfig& config,
                                   const Condition& condition,
                                   const std::string& out_root) {
    auto est = estimators(config);
    skills::SkillLibrary library;
    for (const auto& name : condition.skill_names) {
        fs::path ckpt = fs::path(out_root) / (name + "_best.ckpt");
        if (!fs::exists(ckpt))
            throw MissingArtifactError("missing checkpoint: " + ckpt.string());
        nn::Checkpoint loaded = nn::load_checkpoint(ckpt.string());
        skills::SkillSpec spec = skill_spec_for(name, config);
        spec.policy = std::move(loaded.net);
        library = skills::register_skill(library, std::move(spec));
    }
    return library;
}

std::string write_library_manifest(const ExperimentConfig& config,
                                   const std::vector<std::string>& skill_names,
                                   const std::string& out_root,
                                   const std::string& file_name) {
    std::vector<skills::ManifestEntry> entries;
    for (const auto& name : skill_names) {
        skills::ManifestEntry e;
        e.name = skill_spec_for(name, config).name;
        e.kind = skill_spec_for(name, config).kind;
        e.checkpoint = name + "_best.ckpt";
        entries.push_back(std::move(e));
    }
    std::string path = (fs::path(out_root) / file_name).string();
    skills::save_manifest(path, entries);
    return path;
}

AggregateMetrics cmd_eval(const ExperimentConfig& config, const std::string& out_root) {
    Condition condition = resolve_condition(config);
    skills::SkillLibrary library = build_library(config, condition, out_root);
    arb::PriorityTable priorities = priority_table(config);
    auto est = estimators(config);

    fs::path dir = fs::path(out_root) / condition.id;
    fs::create_directories(dir);

    Rng episode_rng(config.seed ^ fnv(condition.id));
    std::vector<arb::EpisodeMetrics> episodes;
    std::ostringstream trace0;

    for (int e = 0; e < config.eval.episodes; ++e) {
        sim::SimConfig sim_cfg = config.sim;
        sim_cfg.seed = episode_rng.fork_seed();
        sim::WorldState world = sim::reset(sim_cfg, condition.setup);
        arb::EpisodeOptions opts;
        opts.steps = config.eval.steps;
        arb::EpisodeResult result =
            arb::run_episode(library, priorities, est, std::move(world), opts);
        if (e == 0) {
            trace0 << hash_comment(config) << arb::trace_csv_header(est) << '\n';
            for (const auto& rec : result.trace)
                trace0 << arb::trace_csv_row(rec) << '\n';
        }
        episodes.push_back(result.metrics);
    }

    std::ostringstream ecsv;
    ecsv << hash_comment(config)
         << "episode,stir_reward,spill_activations,mean_d,mean_theta,max_V,steps,aborted\n";
    std::vector<double> stir, spill, slide, overturn;
    for (size_t e = 0; e < episodes.size(); ++e) {
        const auto& m = episodes[e];
        ecsv << e << ',' << fmt(m.stir_reward) << ',' << m.spill_activations << ','
             << fmt(m.mean_d) << ',' << fmt(m.mean_theta) << ',' << fmt(m.max_V) << ','
             << m.steps << ',' << (m.aborted ? 1 : 0) << '\n';
        stir.push_back(m.stir_reward);
        spill.push_back(m.spill_activations);
        slide.push_back(m.mean_d);
        overturn.push_back(m.mean_theta);
    }

    AggregateMetrics agg;
    agg.model = condition.id;
    agg.episodes = static_cast<int>(episodes.size());
    MeanStd s;
    s = mean_std(stir);
    agg.stir_mean = s.mean;
    agg.stir_std = s.std_dev;
    s = mean_std(spill);
    agg.spill_mean = s.mean;
    agg.spill_std = s.std_dev;
    s = mean_std(slide);
    agg.slide_mean = s.mean;
    agg.slide_std = s.std_dev;
    s = mean_std(overturn);
    agg.overturn_mean = s.mean;
    agg.overturn_std = s.std_dev;
    agg.slide_na = condition.setup == sim::Setup::Fixed;
    agg.overturn_na = condition.setup == sim::Setup::Fixed;

    std::ostringstream mcsv;
    mcsv << hash_comment(config)
         << "model,stir_mean,stir_std,spill_mean,spill_std,slide_mean,slide_std,"
            "overturn_mean,overturn_std,episodes\n";
    mcsv << agg.model << ',' << fmt(agg.stir_mean) << ',' << fmt(agg.stir_std) << ','
         << fmt(agg.spill_mean) << ',' << fmt(agg.spill_std) << ',';
    if (agg.slide_na)
        mcsv << "N/A,N/A,";
    else
        mcsv << fmt(agg.slide_mean) << ',' << fmt(agg.slide_std) << ',';
    if (agg.overturn_na)
        mcsv << "N/A,N/A,";
    else
        mcsv << fmt(agg.overturn_mean) << ',' << fmt(agg.overturn_std) << ',';
    mcsv << agg.episodes << '\n';

    write_file((dir / "episodes.csv").string(), ecsv.str());
    write_file((dir / "metrics.csv").string(), mcsv.str());
    write_file((dir / "trace_episode0.csv").string(), trace0.str());
    write_file((dir / "config.snapshot").string(), config_json(config) + "\n");
    write_library_manifest(config, condition.skill_names, out_root,
                           condition.id + "/library.manifest.json");
    return agg;
}

AggregateMetrics read_metrics(const std::string& metrics_csv) {
    std::ifstream is(metrics_csv);
    if (!is) throw MissingArtifactError("cannot open: " + metrics_csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(line);
    }
    if (rows.size() < 2) throw ConfigError("metrics file has no data row: " + metrics_csv);

    std::vector<std::string> fields;
    std::stringstream ss(rows[1]);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 10) throw ConfigError("malformed metrics row: " + metrics_csv);

    AggregateMetrics m;
    m.model = fields[0];
    m.stir_mean = std::stod(fields[1]);
    m.stir_std = std::stod(fields[2]);
    m.spill_mean = std::stod(fields[3]);
    m.spill_std = std::stod(fields[4]);
    m.slide_na = fields[5] == "N/A";
    if (!m.slide_na) {
        m.slide_mean = std::stod(fields[5]);
        m.slide_std = std::stod(fields[6]);
    }
    m.overturn_na = fields[7] == "N/A";
    if (!m.overturn_na) {
        m.overturn_mean = std::stod(fields[7]);
        m.overturn_std = std::stod(fields[8]);
    }
    m.episodes = std::stoi(fields[9]);
    return m;
}

CompareReport cmd_compare(const std::string& results_dir) {
    CompareReport report;
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        if (!entry.is_directory()) continue;
        fs::path metrics = entry.path() / "metrics.csv";
        if (fs::exists(metrics)) report.models.push_back(read_metrics(metrics.string()));
    }
    std::sort(report.models.begin(), report.models.end(),
              [](const auto& a, const auto& b) { return a.model < b.model; });

    auto find = [&](const std::string& model) -> const AggregateMetrics* {
        for (const auto& m : report.models)
            if (m.model == model) return &m;
        return nullptr;
    };
    auto order_of = [](double a, double b) { return a < b ? '<' : (a > b ? '>' : '='); };

    std::ostringstream text;
    std::ostringstream ccsv;
    ccsv << "metric,model_a,model_b,mean_a,mean_b,ordering\n";
    for (size_t i = 0; i < report.models.size(); ++i) {
        for (size_t j = i + 1; j < report.models.size(); ++j) {
            const auto& a = report.models[i];
            const auto& b = report.models[j];
            struct Entry {
                const char* metric;
                double va, vb;
                bool skip;
            } entries[] = {
                {"stir_reward", a.stir_mean, b.stir_mean, false},
                {"spill", a.spill_mean, b.spill_mean, false},
                {"slide_d", a.slide_mean, b.slide_mean, a.slide_na || b.slide_na},
                {"overturn_theta", a.overturn_mean, b.overturn_mean,
                 a.overturn_na || b.overturn_na},
            };
            for (const auto& e : entries) {
                if (e.skip) continue;
                ComparePair pair{e.metric, a.model, b.model, e.va, e.vb,
                                 order_of(e.va, e.vb)};
                report.pairs.push_back(pair);
                ccsv << e.metric << ',' << a.model << ',' << b.model << ','
                     << fmt(e.va) << ',' << fmt(e.vb) << ',' << pair.ordering << '\n';
                text << e.metric << ": " << a.model << " (" << e.va << ") "
                     << pair.ordering << " " << b.model << " (" << e.vb << ")\n";
            }
        }
    }

    const AggregateMetrics* bf = find("pi_b-F");
    const AggregateMetrics* bu = find("pi_b-U");
    const AggregateMetrics* l4 = find("L4-U");
    if (bf && bu && l4) {
        report.stir_tradeoff_holds =
            bf->stir_mean > bu->stir_mean && bu->stir_mean > l4->stir_mean;
        text << "stir tradeoff pi_b-F > pi_b-U > L4-U: "
             << (*report.stir_tradeoff_holds ? "holds" : "violated") << '\n';
    }
    if (bu && l4) {
        report.spill_reduction_holds = l4->spill_mean < bu->spill_mean;
        text << "spill reduction L4-U < pi_b-U: "
             << (*report.spill_reduction_holds ? "holds" : "violated") << '\n';
        report.slide_reduction_holds = l4->slide_mean < bu->slide_mean;
        text << "slide reduction L4-U < pi_b-U: "
             << (*report.slide_reduction_holds ? "holds" : "violated") << '\n';
    }
    report.text = text.str();
    write_file((fs::path(results_dir) / "compare.csv").string(), ccsv.str());
    return report;
}

std::string cmd_trace(const ExperimentConfig& config, int particle,
                      const std::string& out_root) {
    Condition condition = resolve_condition(config);
    if (particle < 0 || particle >= config.sim.n_particles)
        throw ConfigError("particle index out of range");
    skills::SkillLibrary library = build_library(config, condition, out_root);
    arb::PriorityTable priorities = priority_table(config);
    auto est = estimators(config);

    Rng episode_rng(config.seed ^ fnv(condition.id));
    sim::SimConfig sim_cfg = config.sim;
    sim_cfg.seed = episode_rng.fork_seed();
    sim::WorldState world = sim::reset(sim_cfg, condition.setup);

    arb::EpisodeOptions opts;
    opts.steps = config.eval.steps;
    opts.trace_particle = particle;
    arb::EpisodeResult result =
        arb::run_episode(library, priorities, est, std::move(world), opts);

    std::ostringstream csv;
    csv << hash_comment(config) << "step,x,y,skill\n";
    for (size_t s = 0; s < result.particle_track.size(); ++s)
        csv << s << ',' << fmt(result.particle_track[s].x) << ','
            << fmt(result.particle_track[s].y) << ',' << result.trace[s].skill << '\n';

    fs::path dir = fs::path(out_root) / condition.id;
    std::string path = (dir / ("trace_particle" + std::to_string(particle) + ".csv")).string();
    write_file(path, csv.str());
    return path;
}

}  // namespace safestir::harness
