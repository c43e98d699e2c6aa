#include "safestir/harness/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "safestir/errors.hpp"

namespace safestir::harness {

using nlohmann::json;

ExperimentConfig default_config(const std::string& preset) {
    ExperimentConfig c;
    c.preset = preset;
    c.risks = {{"slide", "d", 0.05, 0.02},
               {"overturn", "theta", 0.3, 0.1},
               {"spill", "V", 0.66, 0.33}};
    c.priority = {"overturn", "spill", "slide"};

    if (preset == "desk") {
        c.sim.n_particles = 10;
        c.train.episodes = 200;
        c.train.steps_per_episode = 200;
        c.train.hidden_sizes = {40, 30};
        c.train.actor_lr = 1e-3;
        c.train.critic_lr = 1e-3;
        c.eval.episodes = 20;
        c.eval.steps = 300;
    } else if (preset == "paper") {
        c.sim.n_particles = 40;
        c.sim.particle_radius = 0.007;
        c.train.episodes = 1500;
        c.train.steps_per_episode = 500;
        c.train.hidden_sizes = {400, 300};
        c.train.actor_lr = 1e-4;
        c.train.critic_lr = 1e-4;
        c.eval.episodes = 20;
        c.eval.steps = 1000;
    } else {
        throw ConfigError("unknown preset: " + preset + " (expected desk or paper)");
    }
    return c;
}

namespace {

int line_of_offset(const std::string& text, size_t offset) {
    int line = 1;
    for (size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_sim(const json& j, sim::SimConfig& s) {
    maybe(j, "n_particles", s.n_particles);
    maybe(j, "eta", s.eta);
    maybe(j, "phi_max", s.phi_max);
    maybe(j, "phi_step", s.phi_step);
    maybe(j, "max_action_norm", s.max_action_norm);
    maybe(j, "bowl_radius", s.bowl_radius);
    maybe(j, "rim_height", s.rim_height);
    maybe(j, "particle_radius", s.particle_radius);
    maybe(j, "spoon_radius", s.spoon_radius);
    maybe(j, "static_friction_threshold", s.static_friction_threshold);
    maybe(j, "bowl_slide_gain", s.bowl_slide_gain);
    maybe(j, "tilt_gain", s.tilt_gain);
    maybe(j, "tilt_press_threshold", s.tilt_press_threshold);
    maybe(j, "tilt_restoring", s.tilt_restoring);
    maybe(j, "pile_packing_coefficient", s.pile_packing_coefficient);
    maybe(j, "pile_decay", s.pile_decay);
    maybe(j, "bowl_flat_radius", s.bowl_flat_radius);
    maybe(j, "rim_return_rate", s.rim_return_rate);
    maybe(j, "rim_climb_factor", s.rim_climb_factor);
    maybe(j, "spoon_frame_bowl_relative", s.spoon_frame_bowl_relative);
}

void parse_train(const json& j, rl::TrainConfig& t) {
    maybe(j, "episodes", t.episodes);
    maybe(j, "steps_per_episode", t.steps_per_episode);
    maybe(j, "batch_size", t.batch_size);
    maybe(j, "gamma", t.gamma);
    maybe(j, "actor_lr", t.actor_lr);
    maybe(j, "critic_lr", t.critic_lr);
    maybe(j, "tau", t.tau);
    if (j.contains("replay_capacity"))
        t.replay_capacity = j.at("replay_capacity").get<size_t>();
    maybe(j, "eval_period", t.eval_period);
    maybe(j, "eval_rollouts", t.eval_rollouts);
    maybe(j, "warmup_steps", t.warmup_steps);
    maybe(j, "updates_per_step", t.updates_per_step);
    maybe(j, "actor_weight_decay", t.actor_weight_decay);
    maybe(j, "epsilon_start", t.epsilon.start);
    maybe(j, "epsilon_floor", t.epsilon.floor);
    maybe(j, "epsilon_decay_fraction", t.epsilon.decay_fraction);
    maybe(j, "noise_sigma", t.noise_sigma);
    maybe(j, "noise_theta", t.noise_theta);
    maybe(j, "noise_dt", t.noise_dt);
    maybe(j, "hidden_sizes", t.hidden_sizes);
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    std::string text = buffer.str();

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << path << ":" << line_of_offset(text, e.byte) << ": " << e.what();
        throw ConfigError(os.str());
    }

    try {
        std::string preset = doc.value("preset", std::string("desk"));
        ExperimentConfig c = default_config(preset);
        if (doc.contains("schema_version") &&
            doc.at("schema_version").get<int>() != c.schema_version)
            throw ConfigError(path + ": unsupported schema_version");
        maybe(doc, "condition", c.condition);
        if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("sim")) parse_sim(doc.at("sim"), c.sim);
        if (doc.contains("train")) parse_train(doc.at("train"), c.train);
        if (doc.contains("risks")) {
            c.risks.clear();
            for (const auto& r : doc.at("risks"))
                c.risks.push_back({r.at("id").get<std::string>(),
                                   r.at("parameter").get<std::string>(),
                                   r.at("kappa_a").get<double>(),
                                   r.at("kappa_d").get<double>()});
        }
        maybe(doc, "priority", c.priority);
        if (doc.contains("eval")) {
            const auto& e = doc.at("eval");
            maybe(e, "episodes", c.eval.episodes);
            maybe(e, "steps", c.eval.steps);
            maybe(e, "trace_particle", c.eval.trace_particle);
        }
        maybe(doc, "output_dir", c.output_dir);
        maybe(doc, "custom_setup", c.custom_setup);
        maybe(doc, "custom_skills", c.custom_skills);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_json(const ExperimentConfig& c) {
    json doc;
    doc["schema_version"] = c.schema_version;
    doc["condition"] = c.condition;
    doc["preset"] = c.preset;
    doc["seed"] = c.seed;
    doc["sim"] = {{"n_particles", c.sim.n_particles},
                  {"eta", c.sim.eta},
                  {"phi_max", c.sim.phi_max},
                  {"phi_step", c.sim.phi_step},
                  {"max_action_norm", c.sim.max_action_norm},
                  {"bowl_radius", c.sim.bowl_radius},
                  {"rim_height", c.sim.rim_height},
                  {"particle_radius", c.sim.particle_radius},
                  {"spoon_radius", c.sim.spoon_radius},
                  {"static_friction_threshold", c.sim.static_friction_threshold},
                  {"bowl_slide_gain", c.sim.bowl_slide_gain},
                  {"tilt_gain", c.sim.tilt_gain},
                  {"tilt_press_threshold", c.sim.tilt_press_threshold},
                  {"tilt_restoring", c.sim.tilt_restoring},
                  {"pile_packing_coefficient", c.sim.pile_packing_coefficient},
                  {"pile_decay", c.sim.pile_decay},
                  {"bowl_flat_radius", c.sim.bowl_flat_radius},
                  {"rim_return_rate", c.sim.rim_return_rate},
                  {"rim_climb_factor", c.sim.rim_climb_factor},
                  {"spoon_frame_bowl_relative", c.sim.spoon_frame_bowl_relative}};
    doc["train"] = {{"episodes", c.train.episodes},
                    {"steps_per_episode", c.train.steps_per_episode},
                    {"batch_size", c.train.batch_size},
                    {"gamma", c.train.gamma},
                    {"actor_lr", c.train.actor_lr},
                    {"critic_lr", c.train.critic_lr},
                    {"tau", c.train.tau},
                    {"replay_capacity", c.train.replay_capacity},
                    {"eval_period", c.train.eval_period},
                    {"eval_rollouts", c.train.eval_rollouts},
                    {"warmup_steps", c.train.warmup_steps},
                    {"updates_per_step", c.train.updates_per_step},
                    {"actor_weight_decay", c.train.actor_weight_decay},
                    {"epsilon_start", c.train.epsilon.start},
                    {"epsilon_floor", c.train.epsilon.floor},
                    {"epsilon_decay_fraction", c.train.epsilon.decay_fraction},
                    {"noise_sigma", c.train.noise_sigma},
                    {"noise_theta", c.train.noise_theta},
                    {"noise_dt", c.train.noise_dt},
                    {"hidden_sizes", c.train.hidden_sizes}};
    doc["risks"] = json::array();
    for (const auto& r : c.risks)
        doc["risks"].push_back({{"id", r.id},
                                {"parameter", r.parameter},
                                {"kappa_a", r.kappa_a},
                                {"kappa_d", r.kappa_d}});
    doc["priority"] = c.priority;
    doc["eval"] = {{"episodes", c.eval.episodes},
                   {"steps", c.eval.steps},
                   {"trace_particle", c.eval.trace_particle}};
    doc["output_dir"] = c.output_dir;
    doc["custom_setup"] = c.custom_setup;
    doc["custom_skills"] = c.custom_skills;
    return doc.dump(2);
}

std::string config_hash(const ExperimentConfig& c) {
    std::string text = config_json(c);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::vector<risk::RiskEstimator> estimators(const ExperimentConfig& config) {
    std::vector<risk::RiskEstimator> out;
    for (const auto& r : config.risks)
        out.push_back(risk::make_estimator(r.id, r.parameter, r.kappa_a, r.kappa_d));
    return out;
}

arb::PriorityTable priority_table(const ExperimentConfig& config) {
    arb::PriorityTable table;
    table.order = config.priority;
    for (size_t i = 0; i < table.order.size(); ++i)
        for (size_t j = i + 1; j < table.order.size(); ++j)
            if (table.order[i] == table.order[j])
                throw ConfigError("priority table lists '" + table.order[i] + "' twice");
    return table;
}

Condition resolve_condition(const ExperimentConfig& config) {
    const std::string& id = config.condition;
    if (id == "pi_b-F") return {id, sim::Setup::Fixed, {"stir"}};
    if (id == "pi_b-U") return {id, sim::Setup::Unrestricted, {"stir"}};
    if (id == "L2-F") return {id, sim::Setup::Fixed, {"stir", "spill"}};
    if (id == "L4-U")
        return {id, sim::Setup::Unrestricted, {"stir", "spill", "slide", "overturn"}};
    if (id == "pi_c-U") return {id, sim::Setup::Unrestricted, {"compound"}};
    if (id == "custom") {
        if (config.custom_skills.empty())
            throw ConfigError("custom condition needs custom_skills");
        sim::Setup setup = config.custom_setup == "fixed" ? sim::Setup::Fixed
                                                          : sim::Setup::Unrestricted;
        return {id, setup, config.custom_skills};
    }
    throw ConfigError("unknown condition: " + id);
}

sim::Setup training_setup(const std::string& skill_name) {
    if (skill_name == "stir" || skill_name == "spill") return sim::Setup::Fixed;
    if (skill_name == "slide" || skill_name == "overturn" || skill_name == "compound")
        return sim::Setup::Unrestricted;
    throw ConfigError("unknown skill: " + skill_name);
}

bool known_skill(const std::string& skill_name) {
    return skill_name == "stir" || skill_name == "spill" || skill_name == "slide" ||
           skill_name == "overturn" || skill_name == "compound";
}

}  // namespace safestir::harness
