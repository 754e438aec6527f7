#include "tsdag/alarm.hpp"

namespace tsdag {

namespace detail {
extern const char* const alarm_json_text;
}

const GraphFile& alarm_graph() {
    static const GraphFile g = parse_graph_json(nlohmann::json::parse(detail::alarm_json_text));
    return g;
}

}  // namespace tsdag
