#include "octcnn/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "octcnn/error.hpp"
#include "octcnn/image_io.hpp"

namespace octcnn {

const char* label_name(Label l) { return l == Label::glaucoma ? "glaucoma" : "normal"; }

Label parse_label(const std::string& token) {
    if (token == "glaucoma") return Label::glaucoma;
    if (token == "normal") return Label::normal;
    throw DataError("unknown label token '" + token + "' (expected 'glaucoma' or 'normal')");
}

int Dataset::count(Label l) const {
    int n = 0;
    for (const auto& s : samples) n += s.label == l ? 1 : 0;
    return n;
}

const Sample* Dataset::find(const std::string& sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& manifest) {
    std::ifstream is(manifest);
    if (!is) throw IoError("cannot open manifest '" + manifest.string() + "'");
    const std::filesystem::path base = manifest.parent_path();

    Dataset d;
    d.manifest_path = manifest;

    std::string line;
    if (!std::getline(is, line))
        throw DataError("manifest '" + manifest.string() + "' is empty");
    if (split_csv_row(line) != std::vector<std::string>{"sample_id", "path", "label",
                                                        "patient_id"})
        throw DataError("manifest '" + manifest.string() +
                        "': header must be 'sample_id,path,label,patient_id'");

    std::set<std::string> seen_ids;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 4)
            throw DataError("manifest row " + std::to_string(row) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        Sample s;
        s.sample_id = fields[0];
        s.patient_id = fields[3];
        if (s.sample_id.empty() || s.patient_id.empty())
            throw DataError("manifest row " + std::to_string(row) +
                            ": sample_id and patient_id must be nonempty");
        if (!seen_ids.insert(s.sample_id).second)
            throw DataError("manifest row " + std::to_string(row) + ": duplicate sample_id '" +
                            s.sample_id + "'");
        try {
            s.label = parse_label(fields[2]);
        } catch (const DataError& e) {
            throw DataError("manifest row " + std::to_string(row) + ": " + e.what());
        }
        const std::filesystem::path img_path =
            std::filesystem::path(fields[1]).is_absolute() ? std::filesystem::path(fields[1])
                                                           : base / fields[1];
        try {
            s.image = read_image_gray(img_path);
        } catch (const Error& e) {
            throw DataError("manifest row " + std::to_string(row) + ": " + e.what());
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

Dataset subset(const Dataset& d, const std::vector<std::string>& sample_ids) {
    Dataset out;
    out.manifest_path = d.manifest_path;
    out.samples.reserve(sample_ids.size());
    for (const auto& id : sample_ids) {
        const Sample* s = d.find(id);
        if (!s) throw DataError("subset: unknown sample_id '" + id + "'");
        out.samples.push_back(*s);
    }
    return out;
}

Tensor preprocess_for_finetune(const Tensor& image) {
    if (image.rank() != 3 || image.extent(2) != 1)
        throw DimensionError("preprocess_for_finetune needs an HxWx1 image, got " +
                             image.shape_str());
    const int oh = (image.extent(0) + 1) / 2;
    const int ow = (image.extent(1) + 1) / 2;
    Tensor half = bilinear_resize(image, oh, ow);
    Tensor out({oh, ow, 3});
    const float* hp = half.data();
    float* op = out.data();
    for (std::size_t i = 0; i < half.size(); ++i) {
        op[3 * i] = hp[i];
        op[3 * i + 1] = hp[i];
        op[3 * i + 2] = hp[i];
    }
    return out;
}

} // namespace octcnn
