#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "synrec/models.hpp"

namespace synrec {

// On-disk container: magic "SYNREC1\n", a u32-length-prefixed JSON header,
// then named blocks of 64-bit floats. All integers and floats little-endian.
inline constexpr char kCheckpointMagic[8] = {'S', 'Y', 'N', 'R', 'E', 'C', '1', '\n'};

struct NamedBlock {
    std::string name;
    std::vector<double> values;
};

struct Container {
    nlohmann::json header;
    std::vector<NamedBlock> blocks;

    const NamedBlock& block(const std::string& name) const;
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);
void write_container_file(const std::string& path, const Container& c);
Container read_container_file(const std::string& path);

Container to_container(const TrainedModel& model);
TrainedModel model_from_container(const Container& c);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace synrec
