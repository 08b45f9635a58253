#include "otalign/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace otalign {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const char*>(data);
        buf_.append(p, n);
    }
    template <class T>
    void pod(T v) {
        bytes(&v, sizeof v);
    }
    void matrix(const Matrix& m) {
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                pod(m(i, j));
            }
        }
    }
    void vector(const Vector& v) {
        for (Index i = 0; i < v.size(); ++i) {
            pod(v(i));
        }
    }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

    void bytes(void* out, std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw Error(ErrorKind::Checkpoint, name_ + ": truncated checkpoint");
        }
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }
    template <class T>
    T pod() {
        T v{};
        bytes(&v, sizeof v);
        return v;
    }
    Matrix matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                m(i, j) = pod<double>();
            }
        }
        return m;
    }
    Vector vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) {
            v(i) = pod<double>();
        }
        return v;
    }
    std::size_t remaining() const { return data_.size() - pos_; }
    void header(std::string_view magic) {
        char got[8];
        bytes(got, sizeof got);
        if (std::string_view(got, sizeof got) != magic) {
            throw Error(ErrorKind::Checkpoint, name_ + ": bad magic bytes");
        }
        const auto version = pod<std::uint32_t>();
        pod<std::uint32_t>();
        if (version != kCheckpointVersion) {
            throw Error(ErrorKind::Checkpoint, name_ + ": unsupported version " + std::to_string(version));
        }
    }
    const std::string& name() const { return name_; }

private:
    std::string data_;
    std::string name_;
    std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Checkpoint, "cannot open checkpoint " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void header(Writer& w, std::string_view magic) {
    w.bytes(magic.data(), magic.size());
    w.pod(kCheckpointVersion);
    w.pod(std::uint32_t{0});
}

void weights(Writer& w, const EncoderWeights& p) {
    w.matrix(p.w1);
    w.vector(p.b1);
    w.matrix(p.w2);
    w.vector(p.b2);
}

EncoderWeights weights(Reader& r, Index in_dim, Index hidden, Index out) {
    EncoderWeights p;
    p.w1 = r.matrix(in_dim, hidden);
    p.b1 = r.vector(hidden);
    p.w2 = r.matrix(hidden, out);
    p.b2 = r.vector(out);
    return p;
}

void write_sidecar(const std::filesystem::path& path, nlohmann::json meta) {
    meta["layout"] = "row-major float64 little-endian";
    meta["version"] = kCheckpointVersion;
    meta["sha256"] = sha256_file(path);
    write_file_atomic(path.string() + ".json", meta.dump(2) + "\n");
}

// Guards against absurd dimensions before allocating.
void check_dims(const Reader& r, std::uint64_t doubles) {
    if (doubles > r.remaining() / sizeof(double)) {
        throw Error(ErrorKind::Checkpoint, r.name() + ": dimensions do not match file size");
    }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw Error(ErrorKind::Io, "short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_plan(const Matrix& plan, const std::filesystem::path& path) {
    Writer w;
    header(w, kPlanMagic);
    w.pod(static_cast<std::uint64_t>(plan.rows()));
    w.pod(static_cast<std::uint64_t>(plan.cols()));
    w.matrix(plan);
    write_file_atomic(path, w.str());
    write_sidecar(path, {{"format", "plan"}, {"rows", plan.rows()}, {"cols", plan.cols()}});
}

Matrix read_plan(const std::filesystem::path& path) {
    Reader r(slurp(path), path.string());
    r.header(kPlanMagic);
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    const std::uint64_t stored = r.remaining() / sizeof(double);
    if (rows == 0 || cols == 0 || r.remaining() % sizeof(double) != 0 || rows > stored ||
        stored % rows != 0 || stored / rows != cols) {
        throw Error(ErrorKind::Checkpoint, path.string() + ": dimensions do not match file size");
    }
    return r.matrix(static_cast<Index>(rows), static_cast<Index>(cols));
}

void write_model(const ModelCheckpoint& model, const std::filesystem::path& path) {
    const auto& p = model.params;
    Writer w;
    header(w, kModelMagic);
    w.pod(static_cast<std::uint64_t>(p.weights.in_dim()));
    w.pod(static_cast<std::uint64_t>(p.weights.hidden_dim()));
    w.pod(static_cast<std::uint64_t>(p.weights.out_dim()));
    w.pod(static_cast<std::int64_t>(p.step));
    w.pod(model.lambda);
    weights(w, p.weights);
    weights(w, p.first_moment);
    weights(w, p.second_moment);
    write_file_atomic(path, w.str());
    write_sidecar(path, {{"format", "model"},
                         {"in_dim", p.weights.in_dim()},
                         {"hidden", p.weights.hidden_dim()},
                         {"out", p.weights.out_dim()},
                         {"step", p.step},
                         {"lambda", model.lambda}});
}

ModelCheckpoint read_model(const std::filesystem::path& path) {
    Reader r(slurp(path), path.string());
    r.header(kModelMagic);
    const auto in_dim = r.pod<std::uint64_t>();
    const auto hidden = r.pod<std::uint64_t>();
    const auto out = r.pod<std::uint64_t>();
    ModelCheckpoint model;
    model.params.step = r.pod<std::int64_t>();
    model.lambda = r.pod<double>();
    if (in_dim == 0 || hidden == 0 || hidden != out) {
        throw Error(ErrorKind::Checkpoint, path.string() + ": invalid encoder dimensions");
    }
    const std::uint64_t per_block = in_dim * hidden + hidden + hidden * out + out;
    check_dims(r, per_block);
    if (r.remaining() != 3 * per_block * sizeof(double)) {
        throw Error(ErrorKind::Checkpoint, path.string() + ": dimensions do not match file size");
    }
    const auto i = static_cast<Index>(in_dim);
    const auto h = static_cast<Index>(hidden);
    const auto o = static_cast<Index>(out);
    model.params.weights = weights(r, i, h, o);
    model.params.first_moment = weights(r, i, h, o);
    model.params.second_moment = weights(r, i, h, o);
    return model;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ostringstream out;
    out.precision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << m(i, j);
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Io, "sha256 initialisation failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int k = 0; k < len; ++k) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
    }
    return hex.str();
}

}  // namespace otalign
