#include "cnnsa/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "cnnsa/errors.hpp"
#include "cnnsa/rng.hpp"

namespace cnnsa::embeddings {

namespace {

bool parse_double(const std::string& field, double& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_count(const std::string& field, std::size_t& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t sep = line.find(' ', start);
        if (sep == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, sep - start));
        start = sep + 1;
    }
    return fields;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

void EmbeddingTable::insert(const std::string& token, Vec v) {
    if (v.size() != dim_)
        throw DataError("embedding vector for '" + token + "' has wrong dimension");
    table_[token] = std::move(v);
}

Vec* EmbeddingTable::find(const std::string& token) {
    auto it = table_.find(token);
    return it == table_.end() ? nullptr : &it->second;
}

Vec EmbeddingTable::lookup(const std::string& token) const {
    if (token == kPadToken) return Vec(dim_, 0.0);
    auto it = table_.find(token);
    if (it != table_.end()) return it->second;
    Rng rng(mix_seed(seed_, hash_bytes(token)));
    Vec v(dim_);
    for (double& x : v) x = rng.uniform(-0.25, 0.25);
    return v;
}

std::pair<EmbeddingTable, LoadReport> load_embeddings(
    const std::string& path, std::optional<std::size_t> expected_dim,
    std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vector file: " + path);

    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = expected_dim.value_or(0);
    LoadReport report;
    EmbeddingTable table(dim, seed);
    bool first_content_line = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);

        if (first_content_line && fields.size() == 2) {
            // Optional `<count> <dim>` header. A two-field line whose fields
            // are both integers is taken as the header.
            std::size_t count = 0, header_dim = 0;
            if (parse_count(fields[0], count) && parse_count(fields[1], header_dim)) {
                if (expected_dim && header_dim != *expected_dim)
                    throw DataError(path + " line " + std::to_string(line_no) +
                                    ": header dimension " + std::to_string(header_dim) +
                                    " does not match expected " +
                                    std::to_string(*expected_dim));
                dim = header_dim;
                table = EmbeddingTable(dim, seed);
                first_content_line = false;
                continue;
            }
        }
        first_content_line = false;

        if (fields.size() < 2)
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": expected `token v1 ... vs`");
        if (dim == 0) {
            dim = fields.size() - 1;
            table = EmbeddingTable(dim, seed);
        }
        if (fields.size() - 1 != dim)
            throw DataError(path + " line " + std::to_string(line_no) + ": has " +
                            std::to_string(fields.size() - 1) +
                            " values, expected " + std::to_string(dim));
        Vec v(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            if (!parse_double(fields[i + 1], v[i]))
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": malformed float '" + fields[i + 1] + "'");
        }
        if (table.contains(fields[0])) ++report.duplicates_replaced;
        table.insert(fields[0], std::move(v));
    }

    if (table.size() == 0)
        throw DataError(path + ": no vectors loaded (empty file?)");
    report.tokens_loaded = table.size();
    return {std::move(table), report};
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vector file: " + path);
    out << table.size() << ' ' << table.dimension() << '\n';
    for (const auto& [token, v] : table.entries()) {
        out << token;
        for (double x : v) out << ' ' << format_double(x);
        out << '\n';
    }
    if (!out) throw DataError("I/O failure writing " + path);
}

}  // namespace cnnsa::embeddings
