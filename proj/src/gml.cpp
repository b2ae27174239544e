#include "cesim/gml.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cesim {

std::string format_value(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

std::string format_asset(const AssetSpec& spec, const AssetValue& value) {
    if (spec.kind() == AssetKind::Symbolic) {
        std::string out;
        for (const auto& name : spec.symbol_names(symbols(value))) {
            if (!out.empty()) {
                out += '|';
            }
            out += name;
        }
        return out;
    }
    return format_value(scalar(value));
}

namespace {

void write_bucket_attrs(std::ostream& os, const Bucket& bucket, const std::string& indent) {
    for (const auto& [name, value] : bucket) {
        const AssetSpec& spec = bucket.specs()->at(name);
        if (spec.kind() == AssetKind::Symbolic) {
            os << indent << name << " \"" << format_asset(spec, value) << "\"\n";
        } else {
            os << indent << name << " " << format_asset(spec, value) << "\n";
        }
    }
}

} // namespace

std::string to_gml(const Infrastructure& infra, const ExtraAttrsFn& extra_node, const ExtraAttrsFn& extra_link) {
    std::ostringstream os;
    os << "graph [\n  directed 0\n";
    std::map<NodeId, std::size_t> index;
    for (const auto& [id, entry] : infra.nodes()) {
        std::size_t i = index.size();
        index.emplace(id, i);
        os << "  node [\n    id " << i << "\n    label \"" << id << "\"\n"
           << "    active " << (entry.active ? 1 : 0) << "\n";
        write_bucket_attrs(os, entry.assets, "    ");
        if (extra_node) {
            for (const auto& [k, v] : extra_node(id)) {
                os << "    " << k << " " << v << "\n";
            }
        }
        os << "  ]\n";
    }
    for (const auto& [key, bucket] : infra.links()) {
        os << "  edge [\n    source " << index.at(key.a) << "\n    target " << index.at(key.b) << "\n";
        write_bucket_attrs(os, bucket, "    ");
        if (extra_link) {
            for (const auto& [k, v] : extra_link(key.a + "|" + key.b)) {
                os << "    " << k << " " << v << "\n";
            }
        }
        os << "  ]\n";
    }
    os << "]\n";
    return os.str();
}

void write_gml_file(const Infrastructure& infra, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << to_gml(infra);
}

namespace {

struct Token {
    enum Kind { Key, Number, String, Open, Close, End } kind;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (pos_ >= text_.size()) {
            return {Token::End, ""};
        }
        char c = text_[pos_];
        if (c == '[') {
            ++pos_;
            return {Token::Open, "["};
        }
        if (c == ']') {
            ++pos_;
            return {Token::Close, "]"};
        }
        if (c == '"') {
            std::size_t end = text_.find('"', pos_ + 1);
            if (end == std::string::npos) {
                throw ParseError("unterminated string in gml");
            }
            Token t{Token::String, text_.substr(pos_ + 1, end - pos_ - 1)};
            pos_ = end + 1;
            return t;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '[' && text_[pos_] != ']') {
            ++pos_;
        }
        std::string word = text_.substr(start, pos_ - start);
        if (std::isalpha(static_cast<unsigned char>(word[0])) || word[0] == '_') {
            return {Token::Key, word};
        }
        return {Token::Number, word};
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

struct GmlObject {
    std::map<std::string, std::vector<std::string>> values;
    std::map<std::string, std::vector<GmlObject>> children;
};

GmlObject parse_object(Lexer& lexer) {
    GmlObject obj;
    for (;;) {
        Token t = lexer.next();
        if (t.kind == Token::Close || t.kind == Token::End) {
            return obj;
        }
        if (t.kind != Token::Key) {
            throw ParseError("expected key in gml, got '" + t.text + "'");
        }
        Token v = lexer.next();
        if (v.kind == Token::Open) {
            obj.children[t.text].push_back(parse_object(lexer));
        } else if (v.kind == Token::Number || v.kind == Token::String) {
            obj.values[t.text].push_back(v.text);
        } else {
            throw ParseError("expected value for gml key '" + t.text + "'");
        }
    }
}

std::string single(const GmlObject& obj, const std::string& key) {
    auto it = obj.values.find(key);
    if (it == obj.values.end() || it->second.empty()) {
        throw ParseError("gml object missing key '" + key + "'");
    }
    return it->second.front();
}

Bucket bucket_from_attrs(const GmlObject& obj, const SpecSetPtr& specs) {
    Bucket bucket(specs);
    for (const auto& [key, values] : obj.values) {
        const AssetSpec* spec = specs->find(key);
        if (spec == nullptr || values.empty()) {
            continue;
        }
        if (spec->kind() == AssetKind::Symbolic) {
            std::vector<std::string> names;
            std::istringstream ss(values.front());
            std::string part;
            while (std::getline(ss, part, '|')) {
                if (!part.empty()) {
                    names.push_back(part);
                }
            }
            bucket.set(key, spec->symbol_set(names));
        } else {
            bucket.set(key, std::stod(values.front()));
        }
    }
    return bucket;
}

} // namespace

Infrastructure infrastructure_from_gml(const std::string& text,
                                       SpecSetPtr node_specs,
                                       SpecSetPtr link_specs,
                                       SpecSetPtr path_specs) {
    Lexer lexer(text);
    Token head = lexer.next();
    if (head.kind != Token::Key || head.text != "graph") {
        throw ParseError("gml document must start with 'graph ['");
    }
    if (lexer.next().kind != Token::Open) {
        throw ParseError("gml document must start with 'graph ['");
    }
    GmlObject graph = parse_object(lexer);

    Infrastructure infra(std::move(node_specs), std::move(link_specs), std::move(path_specs));
    std::map<std::string, NodeId> label_by_gml_id;
    auto nodes = graph.children.find("node");
    if (nodes != graph.children.end()) {
        for (const GmlObject& node : nodes->second) {
            std::string gml_id = single(node, "id");
            auto label_it = node.values.find("label");
            NodeId label = label_it != node.values.end() && !label_it->second.empty()
                               ? label_it->second.front()
                               : gml_id;
            infra.add_node(label, bucket_from_attrs(node, infra.node_specs()));
            auto active = node.values.find("active");
            if (active != node.values.end() && !active->second.empty() && active->second.front() == "0") {
                infra.set_active(label, false);
            }
            label_by_gml_id.emplace(gml_id, label);
        }
    }
    auto edges = graph.children.find("edge");
    if (edges != graph.children.end()) {
        for (const GmlObject& edge : edges->second) {
            const NodeId& src = label_by_gml_id.at(single(edge, "source"));
            const NodeId& dst = label_by_gml_id.at(single(edge, "target"));
            infra.add_link(src, dst, bucket_from_attrs(edge, infra.link_specs()));
        }
    }
    return infra;
}

Infrastructure read_gml_file(const std::string& path,
                             SpecSetPtr node_specs,
                             SpecSetPtr link_specs,
                             SpecSetPtr path_specs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return infrastructure_from_gml(buffer.str(),
                                   std::move(node_specs), std::move(link_specs), std::move(path_specs));
}

std::string application_to_gml(const Application& app) {
    std::ostringstream os;
    os << "graph [\n  directed 1\n  label \"" << app.id() << "\"\n";
    for (const auto& flow : app.flows()) {
        std::string joined;
        for (const auto& service : flow) {
            if (!joined.empty()) {
                joined += '|';
            }
            joined += service;
        }
        os << "  flow \"" << joined << "\"\n";
    }
    std::map<ServiceId, std::size_t> index;
    for (const ServiceId& service : app.service_order()) {
        std::size_t i = index.size();
        index.emplace(service, i);
        os << "  node [\n    id " << i << "\n    label \"" << service << "\"\n";
        write_bucket_attrs(os, app.service(service), "    ");
        os << "  ]\n";
    }
    for (const auto& [endpoints, bucket] : app.interactions()) {
        os << "  edge [\n    source " << index.at(endpoints.first) << "\n    target "
           << index.at(endpoints.second) << "\n";
        write_bucket_attrs(os, bucket, "    ");
        os << "  ]\n";
    }
    os << "]\n";
    return os.str();
}

Application application_from_gml(const std::string& text,
                                 std::string app_id,
                                 SpecSetPtr service_specs,
                                 SpecSetPtr interaction_specs) {
    Lexer lexer(text);
    Token head = lexer.next();
    if (head.kind != Token::Key || head.text != "graph" || lexer.next().kind != Token::Open) {
        throw ParseError("gml document must start with 'graph ['");
    }
    GmlObject graph = parse_object(lexer);
    Application app(std::move(app_id), service_specs, interaction_specs);
    std::map<std::string, ServiceId> label_by_gml_id;
    auto nodes = graph.children.find("node");
    if (nodes != graph.children.end()) {
        for (const GmlObject& node : nodes->second) {
            std::string gml_id = single(node, "id");
            ServiceId label = node.values.count("label") ? node.values.at("label").front() : gml_id;
            app.add_service(label, bucket_from_attrs(node, service_specs));
            label_by_gml_id.emplace(gml_id, label);
        }
    }
    auto edges = graph.children.find("edge");
    if (edges != graph.children.end()) {
        for (const GmlObject& edge : edges->second) {
            app.add_interaction(label_by_gml_id.at(single(edge, "source")),
                                label_by_gml_id.at(single(edge, "target")),
                                bucket_from_attrs(edge, interaction_specs));
        }
    }
    auto flows = graph.values.find("flow");
    if (flows != graph.values.end()) {
        for (const std::string& joined : flows->second) {
            std::vector<ServiceId> flow;
            std::istringstream ss(joined);
            std::string part;
            while (std::getline(ss, part, '|')) {
                if (!part.empty()) {
                    flow.push_back(part);
                }
            }
            app.add_flow(std::move(flow));
        }
    }
    return app;
}

} // namespace cesim
