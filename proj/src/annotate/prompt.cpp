#include <stdexcept>

#include <json.hpp>

#include "gwm/annotate.hpp"
#include "gwm/codec.hpp"
#include "gwm/md5.hpp"

namespace gwm::annotate {
namespace {

using ordered_json = nlohmann::ordered_json;

const char* yn_name(YesNo v) { return v == YesNo::yes ? "yes" : "no"; }
const std::array<const char*, 3> k_projectile_names = {"0", "1", "2plus"};
const std::array<const char*, 3> k_range_names = {"close", "mid", "far"};
const std::array<const char*, 3> k_advance_names = {"yes", "no", "unclear"};
const std::array<const char*, 4> k_who_names = {"player", "npc", "both", "neither"};

template <typename Enum, size_t N>
Enum parse_enum(const std::string& value, const std::array<const char*, N>& names,
                const char* field) {
    for (size_t i = 0; i < N; ++i)
        if (value == names[i]) return Enum(int(i));
    throw std::runtime_error(std::string("facts schema: field '") + field +
                             "' has out-of-vocabulary value '" + value + "'");
}

YesNo parse_yn(const std::string& value, const char* field) {
    if (value == "yes") return YesNo::yes;
    if (value == "no") return YesNo::no;
    throw std::runtime_error(std::string("facts schema: field '") + field +
                             "' has out-of-vocabulary value '" + value + "'");
}

std::string get_string(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw std::runtime_error(std::string("facts schema: missing string field '") +
                                 field + "'");
    return j.at(field).get<std::string>();
}

// Action phrases for the vanilla template, indexed by AttackKind.
const std::array<const char*, sim::attack_kind_count> k_attack_phrases = {
    "throws a light punch", "throws a medium punch", "throws a heavy punch",
    "throws a light kick",  "throws a medium kick",  "throws a heavy kick",
    "attempts a grab",      "performs a special attack", "winds up a projectile",
};

}  // namespace

std::string NpcPrompt::text() const {
    std::string s = "Strategy: " + strategy_category + ". " + strategy_description;
    s += " Active: ";
    if (active.empty()) {
        s += "none";
    } else {
        for (size_t i = 0; i < active.size(); ++i) {
            if (i > 0) s += "; ";
            s += active[i].tag + " (" + active[i].description + ")";
        }
    }
    s += ". Passive: ";
    if (passive.empty()) {
        s += "none";
    } else {
        for (size_t i = 0; i < passive.size(); ++i) {
            if (i > 0) s += "; ";
            s += passive[i].tag + " (" + passive[i].description + ")";
        }
    }
    s += ".";
    return s;
}

NpcPrompt assemble_prompt(const FactSheet& facts, StrategyLabel label,
                          const std::string& clip_relpath,
                          const ParaphrasePools& pools) {
    if (label == StrategyLabel::dropped)
        throw std::invalid_argument("assemble_prompt: Dropped clip has no prompt");
    const auto& pool = pools.pool_for(label);
    if (pool.empty()) throw std::invalid_argument("assemble_prompt: empty pool");

    NpcPrompt p;
    p.strategy_category = strategy_label_names[size_t(label)];
    p.pool_index = md5_mod(clip_relpath, pool.size());
    p.strategy_description = pool[p.pool_index];
    for (const ActiveTag t : facts.active_tags)
        p.active.push_back({active_tag_names[size_t(t)], pools.active_desc[size_t(t)]});
    for (const PassiveTag t : facts.passive_tags)
        p.passive.push_back({passive_tag_names[size_t(t)], pools.passive_desc[size_t(t)]});
    return p;
}

std::string vanilla_prompt(const std::vector<sim::Event>& events, codec::GameVariant variant) {
    std::string s = std::string("A one-on-one ") + codec::variant_name(variant) +
                    " fight seen from the side; the player character faces the"
                    " NPC in a walled arena.";
    for (const sim::Event& e : events) {
        const char* who = e.actor == sim::FighterId::player ? "The player" : "The NPC";
        std::string verb;
        switch (e.type) {
            case sim::EventType::attack_start:
                verb = e.amount != 0 ? "attacks from the air"
                                     : k_attack_phrases[size_t(e.kind)];
                break;
            case sim::EventType::jump_start: verb = "jumps"; break;
            case sim::EventType::projectile_launch: verb = "launches a projectile"; break;
            case sim::EventType::forward_step: verb = "steps toward the opponent"; break;
            case sim::EventType::backward_step: verb = "steps away from the opponent"; break;
            case sim::EventType::crouch_start: verb = "crouches"; break;
            default: continue;  // passive outcomes are not actions
        }
        s += " ";
        s += who;
        s += " ";
        s += verb;
        s += ".";
    }
    return s;
}

ClipAnnotation annotate_clip_oracle(const std::vector<sim::Event>& events,
                                    const Trajectory& traj_player,
                                    const Trajectory& traj_npc,
                                    codec::GameVariant variant,
                                    const std::string& clip_relpath,
                                    const ParaphrasePools& pools) {
    ClipAnnotation ann;
    ann.facts = observe_facts_oracle(events, traj_player, traj_npc);
    ann.label = classify_strategy(ann.facts);
    if (ann.label != StrategyLabel::dropped)
        ann.prompt = assemble_prompt(ann.facts, ann.label, clip_relpath, pools);
    ann.vanilla = vanilla_prompt(events, variant);
    return ann;
}

std::string facts_to_json(const FactSheet& f) {
    ordered_json j;
    j["does_punch"] = yn_name(f.does_punch);
    j["does_kick"] = yn_name(f.does_kick);
    j["does_jumping_attack"] = yn_name(f.does_jumping_attack);
    j["does_throw"] = yn_name(f.does_throw);
    j["does_special_melee"] = yn_name(f.does_special_melee);
    j["projectile_count"] = k_projectile_names[size_t(f.projectile_count)];
    j["engagement_range"] = k_range_names[size_t(f.engagement_range)];
    j["advances"] = k_advance_names[size_t(f.advances)];
    j["takes_damage"] = yn_name(f.takes_damage);
    j["close_range_pressure"] = yn_name(f.close_range_pressure);
    j["crouches_guard"] = yn_name(f.crouches_guard);
    j["who_attacks_more"] = k_who_names[size_t(f.who_attacks_more)];
    auto active = ordered_json::array();
    for (const ActiveTag t : f.active_tags) active.push_back(active_tag_names[size_t(t)]);
    j["active_tags"] = active;
    auto passive = ordered_json::array();
    for (const PassiveTag t : f.passive_tags) passive.push_back(passive_tag_names[size_t(t)]);
    j["passive_tags"] = passive;
    return j.dump(2);
}

namespace {

FactSheet facts_from_parsed(const nlohmann::json& j) {
    FactSheet f;
    f.does_punch = parse_yn(get_string(j, "does_punch"), "does_punch");
    f.does_kick = parse_yn(get_string(j, "does_kick"), "does_kick");
    f.does_jumping_attack =
        parse_yn(get_string(j, "does_jumping_attack"), "does_jumping_attack");
    f.does_throw = parse_yn(get_string(j, "does_throw"), "does_throw");
    f.does_special_melee =
        parse_yn(get_string(j, "does_special_melee"), "does_special_melee");
    f.projectile_count = parse_enum<ProjectileCount>(
        get_string(j, "projectile_count"), k_projectile_names, "projectile_count");
    f.engagement_range = parse_enum<EngagementRange>(
        get_string(j, "engagement_range"), k_range_names, "engagement_range");
    f.advances = parse_enum<Advance>(get_string(j, "advances"), k_advance_names,
                                     "advances");
    f.takes_damage = parse_yn(get_string(j, "takes_damage"), "takes_damage");
    f.close_range_pressure =
        parse_yn(get_string(j, "close_range_pressure"), "close_range_pressure");
    f.crouches_guard = parse_yn(get_string(j, "crouches_guard"), "crouches_guard");
    f.who_attacks_more = parse_enum<WhoAttacksMore>(
        get_string(j, "who_attacks_more"), k_who_names, "who_attacks_more");
    for (const char* field : {"active_tags", "passive_tags"}) {
        if (!j.contains(field) || !j.at(field).is_array())
            throw std::runtime_error(std::string("facts schema: missing array field '") +
                                     field + "'");
    }
    for (const auto& v : j.at("active_tags")) {
        if (!v.is_string()) throw std::runtime_error("facts schema: non-string active tag");
        f.active_tags.insert(parse_enum<ActiveTag>(v.get<std::string>(),
                                                   active_tag_names, "active_tags"));
    }
    for (const auto& v : j.at("passive_tags")) {
        if (!v.is_string()) throw std::runtime_error("facts schema: non-string passive tag");
        f.passive_tags.insert(parse_enum<PassiveTag>(v.get<std::string>(),
                                                     passive_tag_names, "passive_tags"));
    }
    return f;
}

}  // namespace

FactSheet facts_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("facts schema: invalid json: ") + e.what());
    }
    return facts_from_parsed(j);
}

std::string prompt_json(const ClipAnnotation& ann) {
    ordered_json j;
    auto active = ordered_json::array();
    for (const auto& c : ann.prompt.active)
        active.push_back({{"tag", c.tag}, {"description", c.description}});
    auto passive = ordered_json::array();
    for (const auto& c : ann.prompt.passive)
        passive.push_back({{"tag", c.tag}, {"description", c.description}});
    j["active"] = active;
    j["passive"] = passive;
    if (ann.label == StrategyLabel::dropped) {
        j["strategy"] = nullptr;  // drop marker: facts + label, no prompt
    } else {
        j["strategy"] = {{"category", ann.prompt.strategy_category},
                         {"description", ann.prompt.strategy_description}};
    }
    j["vanilla_prompt"] = ann.vanilla;
    j["label"] = strategy_label_names[size_t(ann.label)];
    j["facts"] = ordered_json::parse(facts_to_json(ann.facts));
    return j.dump(2);
}

ClipAnnotation parse_prompt_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("prompt schema: invalid json: ") + e.what());
    }
    ClipAnnotation ann;
    const std::string label = get_string(j, "label");
    bool found = false;
    for (size_t i = 0; i < strategy_label_names.size(); ++i) {
        if (label == strategy_label_names[i]) {
            ann.label = StrategyLabel(int(i));
            found = true;
        }
    }
    if (!found) throw std::runtime_error("prompt schema: unknown label '" + label + "'");
    ann.facts = facts_from_parsed(j.at("facts"));
    ann.vanilla = get_string(j, "vanilla_prompt");
    for (const char* field : {"active", "passive"}) {
        if (!j.contains(field) || !j.at(field).is_array())
            throw std::runtime_error(std::string("prompt schema: missing array '") +
                                     field + "'");
        for (const auto& c : j.at(field)) {
            PromptClause clause{get_string(c, "tag"), get_string(c, "description")};
            (std::string(field) == "active" ? ann.prompt.active : ann.prompt.passive)
                .push_back(clause);
        }
    }
    if (ann.label != StrategyLabel::dropped) {
        if (!j.contains("strategy") || !j.at("strategy").is_object())
            throw std::runtime_error("prompt schema: missing strategy clause");
        ann.prompt.strategy_category = get_string(j.at("strategy"), "category");
        ann.prompt.strategy_description = get_string(j.at("strategy"), "description");
        if (ann.prompt.strategy_category != strategy_label_names[size_t(ann.label)])
            throw std::runtime_error("prompt schema: strategy category != label");
    }
    return ann;
}

}  // namespace gwm::annotate
