#include "ikeusb/error.hpp"
#include "ikeusb/netsim.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ikeusb::netsim {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string &what) { throw Error(Errc::ConfigError, what); }

void only_keys(const json &obj, std::initializer_list<std::string_view> allowed, const std::string &where)
{
    if (!obj.is_object())
        config_error(where + " must be an object");
    for (const auto &item : obj.items()) {
        bool ok = false;
        for (auto a : allowed)
            ok = ok || item.key() == a;
        if (!ok)
            config_error("unknown key '" + item.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const json &obj, const char *key, T fallback, const std::string &where)
{
    if (!obj.contains(key))
        return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &) {
        config_error("bad value for '" + std::string(key) + "' in " + where);
    }
}

codec::PayloadType payload_from_name(const std::string &name)
{
    using codec::PayloadType;
    for (auto t : {PayloadType::Sa, PayloadType::Ke, PayloadType::Id, PayloadType::Cert, PayloadType::Sig,
                   PayloadType::Nonce, PayloadType::Dev})
        if (codec::payload_name(t) == name)
            return t;
    config_error("unknown payload '" + name + "'");
}

AdversaryAction parse_action(const json &a, std::size_t index)
{
    const std::string where = "adversary[" + std::to_string(index) + "]";
    if (!a.is_object() || !a.contains("action") || !a.at("action").is_string())
        config_error(where + " needs an \"action\" string");
    const std::string kind = a.at("action").get<std::string>();

    if (kind == "flood") {
        only_keys(a, {"action", "count", "target", "forge_source", "template"}, where);
        FloodAction f;
        f.count = get_or<std::size_t>(a, "count", 0, where);
        f.target = get_or<std::string>(a, "target", "", where);
        f.forge_source = get_or<bool>(a, "forge_source", true, where);
        f.msg_template = get_or<std::string>(a, "template", "msg1", where);
        if (f.msg_template != "msg1" && f.msg_template != "garbage")
            config_error(where + ": template must be msg1 or garbage");
        return f;
    }
    if (kind == "tamper") {
        only_keys(a, {"action", "message", "payload", "offset", "byte", "xor"}, where);
        TamperAction t;
        t.message = get_or<int>(a, "message", 1, where);
        if (a.contains("payload"))
            t.selector.payload = payload_from_name(get_or<std::string>(a, "payload", "", where));
        if (a.contains("offset"))
            t.selector.raw_offset = get_or<std::size_t>(a, "offset", 0, where);
        if (t.selector.payload.has_value() == t.selector.raw_offset.has_value())
            config_error(where + ": tamper needs exactly one of payload or offset");
        t.byte_index = get_or<std::size_t>(a, "byte", 0, where);
        const int x = get_or<int>(a, "xor", 1, where);
        if (x <= 0 || x > 255)
            config_error(where + ": xor must be 1..255");
        t.xor_value = static_cast<std::uint8_t>(x);
        return t;
    }
    if (kind == "observe") {
        only_keys(a, {"action", "knowledge"}, where);
        ObserveAction o;
        const std::string k = get_or<std::string>(a, "knowledge", "none", where);
        if (k == "none")
            o.knowledge = Knowledge::None;
        else if (k == "key1+token")
            o.knowledge = Knowledge::HasKey1AndToken;
        else
            config_error(where + ": knowledge must be none or key1+token");
        return o;
    }
    if (kind == "replay") {
        only_keys(a, {"action", "message", "delay"}, where);
        ReplayAction r;
        r.message = get_or<int>(a, "message", 1, where);
        r.delay = get_or<std::size_t>(a, "delay", 0, where);
        return r;
    }
    config_error(where + ": unknown action '" + kind + "'");
}

json action_to_json(const AdversaryAction &action)
{
    struct Visitor {
        json operator()(const FloodAction &f) const
        {
            return {{"action", "flood"},
                    {"count", f.count},
                    {"target", f.target},
                    {"forge_source", f.forge_source},
                    {"template", f.msg_template}};
        }
        json operator()(const TamperAction &t) const
        {
            json j = {{"action", "tamper"}, {"message", t.message}, {"byte", t.byte_index}, {"xor", t.xor_value}};
            if (t.selector.payload)
                j["payload"] = std::string(codec::payload_name(*t.selector.payload));
            if (t.selector.raw_offset)
                j["offset"] = *t.selector.raw_offset;
            return j;
        }
        json operator()(const ObserveAction &o) const
        {
            return {{"action", "observe"}, {"knowledge", o.knowledge == Knowledge::None ? "none" : "key1+token"}};
        }
        json operator()(const ReplayAction &r) const
        {
            return {{"action", "replay"}, {"message", r.message}, {"delay", r.delay}};
        }
    };
    return std::visit(Visitor{}, action);
}

PrincipalConfig principal(std::string name, std::uint32_t address, std::string_view serial)
{
    PrincipalConfig p;
    p.name = std::move(name);
    p.address = address;
    p.serial = token::serial_from_string(serial);
    return p;
}

} // namespace

void validate(const ScenarioConfig &config)
{
    if (config.principals.empty())
        config_error("scenario has no principals");
    std::set<std::string> names;
    std::set<std::uint32_t> addresses;
    for (const auto &p : config.principals) {
        if (p.name.empty())
            config_error("principal without a name");
        if (!names.insert(p.name).second)
            config_error("duplicate principal '" + p.name + "'");
        if (!addresses.insert(p.address).second)
            config_error("duplicate address " + std::to_string(p.address));
    }
    for (const auto &h : config.handshakes) {
        if (!names.contains(h.initiator))
            config_error("unknown principal '" + h.initiator + "'");
        if (!names.contains(h.responder))
            config_error("unknown principal '" + h.responder + "'");
        if (h.initiator == h.responder)
            config_error("principal '" + h.initiator + "' cannot handshake with itself");
    }
    for (const auto &a : config.adversary) {
        if (auto *f = std::get_if<FloodAction>(&a)) {
            if (!names.contains(f->target))
                config_error("flood target '" + f->target + "' is not a principal");
        } else if (auto *t = std::get_if<TamperAction>(&a)) {
            if (t->message < 1 || t->message > 3)
                config_error("tamper message must be 1..3");
            if (config.handshakes.empty())
                config_error("tamper needs a handshake to act on");
        } else if (auto *r = std::get_if<ReplayAction>(&a)) {
            if (r->message < 1 || r->message > 3)
                config_error("replay message must be 1..3");
            if (config.handshakes.empty())
                config_error("replay needs a handshake to capture");
        }
    }
    crypto::DhGroup::by_name(config.dh_group);
    crypto::aead_by_id(config.cipher);
    crypto::signature_scheme_by_id(config.signature_scheme);
}

ScenarioConfig parse_scenario(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        config_error(std::string("scenario is not valid JSON: ") + e.what());
    }
    only_keys(doc, {"name", "variant", "seed", "dh_group", "deployment", "principals", "handshakes", "adversary"},
              "scenario");

    ScenarioConfig c;
    c.name = get_or<std::string>(doc, "name", "scenario", "scenario");
    c.variant = protocol::parse_variant(get_or<std::string>(doc, "variant", "improved", "scenario"));
    c.seed = get_or<std::uint64_t>(doc, "seed", 1, "scenario");
    c.dh_group = get_or<std::string>(doc, "dh_group", "oakley768", "scenario");

    if (doc.contains("deployment")) {
        const json &d = doc.at("deployment");
        only_keys(d, {"key1", "signature", "cipher"}, "deployment");
        if (d.contains("key1")) {
            Bytes raw;
            try {
                raw = from_hex(get_or<std::string>(d, "key1", "", "deployment"));
            } catch (const std::invalid_argument &) {
                config_error("deployment.key1 is not hex");
            }
            if (raw.size() != crypto::kKeySize)
                config_error("deployment.key1 must be 32 octets");
            c.key1 = crypto::SymmetricKey::from(raw);
        }
        c.signature_scheme = get_or<std::string>(d, "signature", c.signature_scheme, "deployment");
        c.cipher = get_or<std::string>(d, "cipher", c.cipher, "deployment");
    }

    if (!doc.contains("principals") || !doc.at("principals").is_array())
        config_error("scenario needs a principals array");
    std::uint32_t next_address = 1;
    for (const auto &p : doc.at("principals")) {
        only_keys(p, {"name", "address", "token", "serial"}, "principal");
        PrincipalConfig pc;
        pc.name = get_or<std::string>(p, "name", "", "principal");
        pc.address = get_or<std::uint32_t>(p, "address", next_address, "principal");
        next_address = pc.address + 1;
        pc.has_token = get_or<bool>(p, "token", true, "principal");
        if (p.contains("serial")) {
            try {
                pc.serial = token::serial_from_string(get_or<std::string>(p, "serial", "", "principal"));
            } catch (const Error &e) {
                config_error("principal '" + pc.name + "': " + e.what());
            }
        }
        c.principals.push_back(std::move(pc));
    }

    if (doc.contains("handshakes")) {
        if (!doc.at("handshakes").is_array())
            config_error("handshakes must be an array");
        for (const auto &h : doc.at("handshakes")) {
            only_keys(h, {"initiator", "responder"}, "handshake");
            c.handshakes.push_back({get_or<std::string>(h, "initiator", "", "handshake"),
                                    get_or<std::string>(h, "responder", "", "handshake")});
        }
    }

    if (doc.contains("adversary")) {
        if (!doc.at("adversary").is_array())
            config_error("adversary must be an array");
        std::size_t i = 0;
        for (const auto &a : doc.at("adversary"))
            c.adversary.push_back(parse_action(a, i++));
    }

    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        config_error("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig &config)
{
    json doc;
    doc["name"] = config.name;
    doc["variant"] = std::string(protocol::variant_name(config.variant));
    doc["seed"] = config.seed;
    doc["dh_group"] = config.dh_group;
    json dep = {{"signature", config.signature_scheme}, {"cipher", config.cipher}};
    if (config.key1)
        dep["key1"] = to_hex(config.key1->view());
    doc["deployment"] = dep;
    doc["principals"] = json::array();
    for (const auto &p : config.principals) {
        json j = {{"name", p.name}, {"address", p.address}, {"token", p.has_token}};
        if (p.serial)
            j["serial"] = token::serial_to_string(*p.serial);
        doc["principals"].push_back(j);
    }
    doc["handshakes"] = json::array();
    for (const auto &h : config.handshakes)
        doc["handshakes"].push_back({{"initiator", h.initiator}, {"responder", h.responder}});
    doc["adversary"] = json::array();
    for (const auto &a : config.adversary)
        doc["adversary"].push_back(action_to_json(a));
    return doc.dump(2);
}

ScenarioConfig default_handshake_scenario(protocol::Variant variant, std::uint64_t seed)
{
    ScenarioConfig c;
    c.name = "handshake";
    c.variant = variant;
    c.seed = seed;
    c.principals = {principal("alice", 1, "AB12345"), principal("bob", 2, "CD67890")};
    c.handshakes = {{"alice", "bob"}};
    c.adversary = {ObserveAction{Knowledge::None}};
    return c;
}

std::vector<ScenarioConfig> matrix_battery(protocol::Variant variant, std::uint64_t seed)
{
    std::vector<ScenarioConfig> out;

    ScenarioConfig honest = default_handshake_scenario(variant, seed);
    honest.name = "honest";
    out.push_back(honest);

    ScenarioConfig flood = honest;
    flood.name = "flood";
    flood.handshakes.clear();
    flood.adversary = {FloodAction{1000, true, "bob", "msg1"}};
    out.push_back(flood);

    ScenarioConfig tamper_sa = honest;
    tamper_sa.name = "tamper-sa";
    tamper_sa.adversary = {TamperAction{1, {codec::PayloadType::Sa, std::nullopt}, 8, 0x01}};
    out.push_back(tamper_sa);

    ScenarioConfig tamper_ke = honest;
    tamper_ke.name = "tamper-ke";
    tamper_ke.adversary = {TamperAction{2, {codec::PayloadType::Ke, std::nullopt}, 5, 0x01}};
    out.push_back(tamper_ke);

    return out;
}

} // namespace ikeusb::netsim
