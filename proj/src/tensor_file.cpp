#include "canopose/tensor_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "canopose/error.hpp"

namespace canopose {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'N', 'P', 'T'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::numeric_limits<float>::is_iec559);

template <typename U>
void put_le(std::ostream& out, U v) {
    std::array<char, sizeof(U)> b;
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), b.size());
}

template <typename U>
U get_le(std::istream& in) {
    std::array<unsigned char, sizeof(U)> b;
    in.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!in) throw Error(ErrorKind::Io, "truncated tensor header");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
}

template <typename T>
std::uint32_t raw_bits(T v) {
    if constexpr (std::is_same_v<T, float>) return std::bit_cast<std::uint32_t>(v);
    else return static_cast<std::uint32_t>(v);
}

template <typename T>
DType dtype_of() {
    if constexpr (std::is_same_v<T, float>) return DType::Float32;
    else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::UInt8;
    else return DType::Int32;
}

template <typename T>
void write_typed(std::ostream& out, const NdArray<T>& t) {
    if (t.ndim() > 255) throw Error(ErrorKind::InvalidArgument, "too many dimensions");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint8_t>(out, kVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.ndim()));
    for (std::size_t d : t.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) {
            throw Error(ErrorKind::InvalidArgument, "dimension exceeds u32");
        }
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (T v : t.values()) {
        if constexpr (sizeof(T) == 1) put_le<std::uint8_t>(out, v);
        else put_le<std::uint32_t>(out, raw_bits(v));
    }
}

template <typename T>
NdArray<T> read_payload(std::istream& in, std::vector<std::size_t> shape) {
    const std::size_t n = NdArray<T>::count(shape);
    std::vector<unsigned char> bytes(n * sizeof(T));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in && n > 0) throw Error(ErrorKind::Io, "truncated tensor payload");
    std::vector<T> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<std::uint32_t>(bytes[i * sizeof(T) + b]) << (8 * b);
        if constexpr (std::is_same_v<T, float>) values[i] = std::bit_cast<float>(v);
        else if constexpr (std::is_same_v<T, std::uint8_t>) values[i] = static_cast<std::uint8_t>(v);
        else values[i] = static_cast<std::int32_t>(v);
    }
    return NdArray<T>(std::move(shape), std::move(values));
}

}  // namespace

void write_tensor(std::ostream& out, const AnyTensor& tensor) {
    std::visit([&](const auto& t) { write_typed(out, t); }, tensor);
    if (!out) throw Error(ErrorKind::Io, "failed writing tensor");
}

AnyTensor read_tensor(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw Error(ErrorKind::Io, "bad tensor magic");
    if (get_le<std::uint8_t>(in) != kVersion) throw Error(ErrorKind::Io, "unsupported tensor version");
    const auto dtype = get_le<std::uint8_t>(in);
    const auto ndim = get_le<std::uint8_t>(in);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = get_le<std::uint32_t>(in);
    switch (static_cast<DType>(dtype)) {
        case DType::Float32: return read_payload<float>(in, std::move(shape));
        case DType::UInt8: return read_payload<std::uint8_t>(in, std::move(shape));
        case DType::Int32: return read_payload<std::int32_t>(in, std::move(shape));
    }
    throw Error(ErrorKind::Io, "unknown tensor dtype");
}

void write_tensor_file(const std::filesystem::path& path, const AnyTensor& tensor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
    write_tensor(out, tensor);
}

AnyTensor read_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return read_tensor(in);
}

NdArray<double> read_real_tensor(const std::filesystem::path& path) {
    const AnyTensor any = read_tensor_file(path);
    const auto* f = std::get_if<NdArray<float>>(&any);
    if (!f) throw Error(ErrorKind::Io, path.string() + " is not float32");
    return NdArray<double>(f->shape(), std::vector<double>(f->values().begin(), f->values().end()));
}

NdArray<std::int32_t> read_int_tensor(const std::filesystem::path& path) {
    AnyTensor any = read_tensor_file(path);
    auto* t = std::get_if<NdArray<std::int32_t>>(&any);
    if (!t) throw Error(ErrorKind::Io, path.string() + " is not int32");
    return std::move(*t);
}

void write_real_tensor(const std::filesystem::path& path, const NdArray<double>& tensor) {
    std::vector<float> v(tensor.values().begin(), tensor.values().end());
    write_tensor_file(path, NdArray<float>(tensor.shape(), std::move(v)));
}

}  // namespace canopose
