package com.example.app16;

public class MainActivity {
    private String name = "item 16";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 16);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
