#include "synrec/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace synrec {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

std::uint32_t get_u32(std::istream& in) {
    char b[4];
    if (!in.read(b, 4)) throw std::runtime_error("checkpoint: truncated while reading u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    char b[8];
    if (!in.read(b, 8)) throw std::runtime_error("checkpoint: truncated while reading u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    return std::bit_cast<double>(get_u64(in));
}

const char* output_kind_name(OutputKind kind) {
    switch (kind) {
        case OutputKind::linear_unit: return "linear";
        case OutputKind::rectified_unit: return "rectified";
        case OutputKind::sigmoid_unit: return "sigmoid";
        case OutputKind::softmax_classes: return "softmax";
    }
    return "linear";
}

OutputKind output_kind_from_name(const std::string& name) {
    if (name == "linear") return OutputKind::linear_unit;
    if (name == "rectified") return OutputKind::rectified_unit;
    if (name == "sigmoid") return OutputKind::sigmoid_unit;
    if (name == "softmax") return OutputKind::softmax_classes;
    throw std::runtime_error("checkpoint: unknown output kind '" + name + "'");
}

}  // namespace

const NamedBlock& Container::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw std::runtime_error("checkpoint: missing block '" + name + "'");
}

void write_container(std::ostream& out, const Container& c) {
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::string header = c.header.dump();
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& block : c.blocks) {
        put_u32(out, static_cast<std::uint32_t>(block.name.size()));
        out.write(block.name.data(), static_cast<std::streamsize>(block.name.size()));
        put_u64(out, block.values.size());
        for (double v : block.values) put_f64(out, v);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed");
}

Container read_container(std::istream& in) {
    char magic[sizeof(kCheckpointMagic)];
    if (!in.read(magic, sizeof(magic)) ||
        !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
        throw std::runtime_error("checkpoint: bad or missing magic (expected \"SYNREC1\")");
    }
    Container c;
    const std::uint32_t header_len = get_u32(in);
    std::string header(header_len, '\0');
    if (!in.read(header.data(), header_len)) {
        throw std::runtime_error("checkpoint: truncated header");
    }
    c.header = nlohmann::json::parse(header);
    while (true) {
        in.peek();
        if (in.eof()) break;
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw std::runtime_error("checkpoint: truncated block name");
        }
        NamedBlock block;
        block.name = std::move(name);
        const std::uint64_t count = get_u64(in);
        block.values.reserve(count);
        for (std::uint64_t j = 0; j < count; ++j) block.values.push_back(get_f64(in));
        c.blocks.push_back(std::move(block));
    }
    return c;
}

void write_container_file(const std::string& path, const Container& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    write_container(out, c);
}

Container read_container_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    return read_container(in);
}

Container to_container(const TrainedModel& model) {
    Container c;
    const NetConfig& cfg = model.config;
    c.header = {
        {"kind", to_string(model.kind)},
        {"num_users", model.num_users},
        {"num_items", model.num_items},
        {"scale", {{"min", model.scale.min_rating}, {"max", model.scale.max_rating}}},
        {"config",
         {{"latent_dim", cfg.latent_dim},
          {"hidden", cfg.hidden},
          {"dropout", cfg.dropout},
          {"output", output_kind_name(cfg.output)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"relevance_threshold", cfg.relevance_threshold},
          {"learning_rate", cfg.learning_rate},
          {"normalize_targets", cfg.normalize_targets}}},
    };
    // parameter_blocks needs mutable access; the copy keeps this function const-correct.
    TrainedModel copy = model;
    auto views = parameter_blocks(copy);
    auto names = parameter_block_names(copy);
    for (std::size_t b = 0; b < views.size(); ++b) {
        c.blocks.push_back({names[b], {views[b].begin(), views[b].end()}});
    }
    c.blocks.push_back({"epoch_losses", model.epoch_losses});
    return c;
}

TrainedModel model_from_container(const Container& c) {
    const auto& h = c.header;
    const std::string kind_name = h.at("kind").get<std::string>();
    auto kind = model_kind_from_string(kind_name);
    if (!kind) throw std::runtime_error("checkpoint: unknown model kind '" + kind_name + "'");

    NetConfig cfg;
    const auto& jc = h.at("config");
    cfg.latent_dim = jc.at("latent_dim").get<std::size_t>();
    cfg.hidden = jc.at("hidden").get<std::vector<std::size_t>>();
    cfg.dropout = jc.at("dropout").get<std::vector<double>>();
    cfg.output = output_kind_from_name(jc.at("output").get<std::string>());
    cfg.epochs = jc.at("epochs").get<std::size_t>();
    cfg.batch_size = jc.at("batch_size").get<std::size_t>();
    cfg.relevance_threshold = jc.at("relevance_threshold").get<int>();
    cfg.learning_rate = jc.at("learning_rate").get<double>();
    cfg.normalize_targets = jc.at("normalize_targets").get<bool>();

    RatingScale scale{h.at("scale").at("min").get<int>(), h.at("scale").at("max").get<int>()};
    Rng shape_rng(0);
    TrainedModel model = build(*kind, h.at("num_users").get<std::size_t>(),
                               h.at("num_items").get<std::size_t>(), scale, cfg, shape_rng);
    auto views = parameter_blocks(model);
    auto names = parameter_block_names(model);
    for (std::size_t b = 0; b < views.size(); ++b) {
        const NamedBlock& block = c.block(names[b]);
        if (block.values.size() != views[b].size()) {
            throw std::runtime_error("checkpoint: block '" + names[b] + "' has " +
                                     std::to_string(block.values.size()) + " values, expected " +
                                     std::to_string(views[b].size()));
        }
        std::copy(block.values.begin(), block.values.end(), views[b].begin());
    }
    model.epoch_losses = c.block("epoch_losses").values;
    return model;
}

void save_model(const TrainedModel& model, const std::string& path) {
    write_container_file(path, to_container(model));
}

TrainedModel load_model(const std::string& path) {
    return model_from_container(read_container_file(path));
}

}  // namespace synrec
