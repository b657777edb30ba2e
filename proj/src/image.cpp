#include "fog/image.hpp"

#include <stdexcept>

namespace fog {

Tensor to_tensor(const Image& img) { return to_tensor(std::vector<Image>{img}); }

Tensor to_tensor(const std::vector<Image>& imgs) {
    if (imgs.empty()) throw std::invalid_argument("to_tensor: empty image list");
    const Image& ref = imgs.front();
    const std::size_t h = ref.height, w = ref.width, c = ref.channels;
    std::vector<double> data(imgs.size() * c * h * w);
    for (std::size_t n = 0; n < imgs.size(); ++n) {
        if (!imgs[n].same_shape(ref)) throw std::invalid_argument("to_tensor: images differ in shape");
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) data[((n * c + ch) * h + y) * w + x] = imgs[n].at(y, x, ch);
    }
    return Tensor({imgs.size(), c, h, w}, std::move(data));
}

Image to_image(const Tensor& t, std::size_t index) {
    if (t.ndim() != 4) throw std::invalid_argument("to_image: expected NCHW tensor, got " + shape_str(t.shape()));
    const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
    if (index >= t.dim(0)) throw std::out_of_range("to_image: batch index out of range");
    Image img(h, w, c);
    const auto d = t.data();
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) img.at(y, x, ch) = d[((index * c + ch) * h + y) * w + x];
    return img;
}

}  // namespace fog
