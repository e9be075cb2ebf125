// Map panel: GeoJSON object points over a plain tiled base map.
// Web-Mercator math here is pure layout; displayed numbers stay verbatim.

export interface GeoFeature {
  type: 'Feature'
  geometry: { type: 'Point'; coordinates: [number, number] }
  properties: Record<string, unknown>
}

export interface FeatureCollection {
  type: 'FeatureCollection'
  features: GeoFeature[]
}

const TILE = 256

function mercator(lon: number, lat: number, zoom: number): [number, number] {
  const scale = TILE * 2 ** zoom
  const x = ((lon + 180) / 360) * scale
  const rad = (lat * Math.PI) / 180
  const y = ((1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2) * scale
  return [x, y]
}

export function renderMap(
  container: HTMLElement,
  collection: FeatureCollection,
  valueColumn: string,
  tileUrl = 'https://tile.openstreetmap.org/{z}/{x}/{y}.png',
  zoom = 12,
): void {
  container.textContent = ''
  if (!collection.features.length) {
    const empty = document.createElement('p')
    empty.className = 'empty-state'
    empty.textContent = 'no mapped objects'
    container.appendChild(empty)
    return
  }
  const coords = collection.features.map((f) => f.geometry.coordinates)
  const lons = coords.map((c) => c[0])
  const lats = coords.map((c) => c[1])
  const center = mercator(
    (Math.min(...lons) + Math.max(...lons)) / 2,
    (Math.min(...lats) + Math.max(...lats)) / 2,
    zoom,
  )
  const width = 640
  const height = 400
  const originX = center[0] - width / 2
  const originY = center[1] - height / 2
  const box = document.createElement('div')
  box.className = 'map-box'
  box.style.width = `${width}px`
  box.style.height = `${height}px`
  const tx0 = Math.floor(originX / TILE)
  const ty0 = Math.floor(originY / TILE)
  for (let tx = tx0; tx * TILE < originX + width; tx++) {
    for (let ty = ty0; ty * TILE < originY + height; ty++) {
      const img = document.createElement('img')
      img.className = 'tile'
      img.loading = 'lazy'
      img.src = tileUrl.replace('{z}', String(zoom)).replace('{x}', String(tx)).replace('{y}', String(ty))
      img.style.left = `${tx * TILE - originX}px`
      img.style.top = `${ty * TILE - originY}px`
      box.appendChild(img)
    }
  }
  for (const feature of collection.features) {
    const [lon, lat] = feature.geometry.coordinates
    const [x, y] = mercator(lon, lat, zoom)
    const dot = document.createElement('div')
    const color = feature.properties[`${valueColumn}_color`]
    dot.className = `map-dot${color ? ` color-${String(color)}` : ''}`
    dot.style.left = `${x - originX}px`
    dot.style.top = `${y - originY}px`
    const value = feature.properties[valueColumn]
    dot.title = `${String(feature.properties.object_id)}: ${value === null ? '·' : String(value)}`
    box.appendChild(dot)
  }
  container.appendChild(box)
}
