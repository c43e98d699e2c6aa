#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "safestir/errors.hpp"
#include "safestir/skills/skills.hpp"

namespace safestir::skills {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr int kManifestVersion = 1;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    json doc;
    doc["schema_version"] = kManifestVersion;
    doc["skills"] = json::array();
    for (const auto& e : entries) {
        json s;
        s["name"] = e.name;
        s["kind"] = e.kind.label();
        if (e.kind.is_prevention()) s["risk"] = e.kind.risk();
        s["checkpoint"] = e.checkpoint;
        doc["skills"].push_back(s);
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw MissingArtifactError("cannot write manifest: " + path);
        os << doc.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open manifest: " + path);
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest parse error in " + path + ": " + e.what());
    }
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kManifestVersion)
        throw ConfigError("manifest schema version mismatch in " + path);

    std::vector<ManifestEntry> entries;
    for (const auto& s : doc.at("skills")) {
        ManifestEntry e;
        e.name = s.at("name").get<std::string>();
        std::string risk = s.value("risk", std::string{});
        e.kind = SkillKind::from_label(s.at("kind").get<std::string>(), risk);
        e.checkpoint = s.at("checkpoint").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

SkillLibrary load_library(const std::string& manifest_path,
                          const std::vector<risk::RiskEstimator>& risks) {
    fs::path base = fs::path(manifest_path).parent_path();
    SkillLibrary library;
    for (const auto& e : read_manifest(manifest_path)) {
        fs::path ckpt = base / e.checkpoint;
        nn::Checkpoint loaded = nn::load_checkpoint(ckpt.string());
        SkillSpec spec;
        if (e.kind.is_base())
            spec = make_stir_skill(std::move(loaded.net));
        else if (e.kind.is_compound())
            spec = make_compound_skill(std::move(loaded.net));
        else
            spec = make_prevention_skill(e.kind.risk(), std::move(loaded.net), risks);
        spec.name = e.name;
        library = register_skill(library, std::move(spec));
    }
    return library;
}

}  // namespace safestir::skills
