#include "tcache/coo_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>

namespace tcache {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

SparseTensor read_coo(std::istream& in) {
    std::optional<Shape> shape;
    std::vector<std::size_t> positions;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "shape:";
            auto pos = line.find(key);
            if (pos != std::string::npos) shape = Shape::parse(trim(line.substr(pos + key.size())));
            continue;
        }
        if (!shape) throw ShapeError("COO line " + std::to_string(line_no) + ": entry before '# shape:' header");
        index.clear();
        std::size_t start = 0;
        double value = 0.0;
        for (std::size_t field = 0;; ++field) {
            auto comma = line.find(',', start);
            std::string tok = trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) {
                if (field != shape->order()) {
                    throw ShapeError("COO line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(shape->order() + 1) + " fields");
                }
                try {
                    std::size_t used = 0;
                    value = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw ShapeError("COO line " + std::to_string(line_no) + ": bad value '" + tok + "'");
                }
                break;
            }
            std::size_t i = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
            if (ec != std::errc() || p != tok.data() + tok.size() || i == 0) {
                throw ShapeError("COO line " + std::to_string(line_no) + ": bad index '" + tok + "'");
            }
            index.push_back(i - 1);
            start = comma + 1;
        }
        positions.push_back(shape->linear_index(index));
        values.push_back(value);
    }
    if (!shape) throw ShapeError("COO input has no '# shape:' header");
    return SparseTensor(*shape, std::move(positions), std::move(values));
}

SparseTensor read_coo_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_coo(in);
}

void write_coo(std::ostream& out, const SparseTensor& t) {
    out << "# shape: " << t.shape().to_string() << '\n';
    out << std::setprecision(17);
    for (std::size_t e = 0; e < t.nnz(); ++e) {
        for (std::size_t i : t.index(e)) out << (i + 1) << ',';
        out << t.values()[e] << '\n';
    }
}

void write_coo_file(const std::string& path, const SparseTensor& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_coo(out, t);
}

SparseTensor nonzeros(const DenseTensor& x) {
    std::vector<std::size_t> positions;
    std::vector<double> values;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
            positions.push_back(i);
            values.push_back(x[i]);
        }
    }
    return SparseTensor(x.shape(), std::move(positions), std::move(values));
}

}  // namespace tcache
